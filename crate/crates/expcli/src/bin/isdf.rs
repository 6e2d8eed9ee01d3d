use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isdf_core::qexp::{
    fit_metrics, refit, shipped_fit, FitError, Init, MixtureFit, RefitOptions, CALIBRATION_POINTS,
    CALIBRATION_REGION,
};
use isdf_expcli::config::BerModes;
use isdf_expcli::output::{curve_path, emit_dat, manifest_path};
use isdf_expcli::preset::FIG4_D_F;
use isdf_expcli::{emit, parse_config, run_sweep, Curve, Engines, Format, Manifest, Preset};

#[derive(Parser)]
#[command(
    name = "isdf",
    version,
    about = "Outage, relay usage and BER sweeps for ISDF power-line relaying"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true, env = "ISDF_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep from a JSON config or a built-in preset.
    Run(RunArgs),
    /// Refit the Gaussian mixture for Q(exp(t)) and print its quality.
    Fit(FitArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Sweep configuration (JSON).
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(Preset))]
    preset: Option<Preset>,
    /// Comma-separated engines: a(nalytic), m(ontecarlo), q(uadrature).
    #[arg(long)]
    engines: Option<Engines>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_ber_mode)]
    ber_mode: Option<BerModes>,
    /// Output file; presets write one file per curve next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Also write a gnuplot data file (.dat) per output.
    #[arg(long)]
    gnuplot: bool,
    /// Mixture fit JSON to use instead of the shipped constants.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Exit nonzero if any row failed.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value_t = 7)]
    terms: usize,
    #[arg(long, default_value_t = RefitOptions::default().restarts)]
    restarts: usize,
    #[arg(long, default_value_t = RefitOptions::default().seed)]
    seed: u64,
    /// Start from evenly spaced terms instead of the shipped constants.
    #[arg(long)]
    heuristic: bool,
    /// Write the fit as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_ber_mode(s: &str) -> Result<BerModes, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("unknown ber mode `{s}` (expected paper_literal, coherent or both)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("warning: could not size worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Fit(args) => fit(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_fit(path: Option<&Path>) -> Result<(MixtureFit, String)> {
    match path {
        None => Ok((shipped_fit(), "shipped".to_owned())),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let fit: MixtureFit =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok((fit, p.display().to_string()))
        }
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let (fit, fit_name) = load_fit(args.fit.as_deref())?;
    let (curves, default_out) = match (&args.config, args.preset) {
        (_, Some(p)) => (
            p.curves(),
            PathBuf::from(format!("{}.{}", p.name(), args.format.extension())),
        ),
        (Some(path), None) => {
            let spec = parse_config(path).with_context(|| format!("config {}", path.display()))?;
            let out = spec
                .output_path
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("sweep.{}", args.format.extension())));
            (
                vec![Curve {
                    label: String::new(),
                    spec,
                }],
                out,
            )
        }
        (None, None) => bail!("either a config file or --preset is required"),
    };
    let out = args.out.clone().unwrap_or(default_out);

    let mut any_failed = false;
    for mut curve in curves {
        let spec = &mut curve.spec;
        if let Some(e) = &args.engines {
            spec.engines = e.clone();
        }
        if let Some(n) = args.trials {
            if n == 0 {
                bail!("--trials must be at least 1");
            }
            spec.n_trials = n;
        }
        if let Some(s) = args.seed {
            spec.seed = s;
        }
        if let Some(m) = args.ber_mode {
            spec.ber_mode = m;
        }
        let path = if curve.label.is_empty() {
            out.clone()
        } else {
            curve_path(&out, &curve.label)
        };
        spec.output_path = Some(path.clone());

        let rows = run_sweep(spec, &fit);
        for r in rows.iter().filter(|r| r.failed()) {
            any_failed = true;
            for e in &r.errors {
                eprintln!("row {} ({}): {e}", r.index, r.sweep_value);
            }
        }
        emit(&rows, args.format, &path)?;
        if args.gnuplot {
            emit_dat(&rows, &path.with_extension("dat"))?;
        }
        let mut manifest = Manifest::new(spec, &path, args.format, &rows);
        manifest.mixture_fit = fit_name.clone();
        if let Some(p) = args.preset {
            manifest.preset = Some(p.name().to_owned());
            manifest.curve = Some(curve.label.clone());
            if p == Preset::Fig4 {
                manifest.notes.push(format!(
                    "relay positions d_f = {FIG4_D_F:?} are a preset choice"
                ));
            }
        }
        manifest.write(&manifest_path(&path))?;
        println!("wrote {} ({} rows)", path.display(), rows.len());
    }

    Ok(if any_failed && args.strict {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn fit(args: FitArgs) -> Result<ExitCode> {
    let opts = RefitOptions {
        restarts: args.restarts,
        seed: args.seed,
        ..RefitOptions::default()
    };
    let init = if args.heuristic {
        Init::Heuristic
    } else {
        let shipped = shipped_fit();
        if args.terms != shipped.m() {
            bail!(
                "the shipped start has {} terms; use --heuristic for --terms {}",
                shipped.m(),
                args.terms
            );
        }
        Init::Terms(shipped.terms)
    };
    let (fit, converged) = match refit(args.terms, CALIBRATION_REGION, init, &opts) {
        Ok(f) => (f, true),
        Err(FitError::NotConverged { best, .. }) => (*best, false),
        Err(e) => return Err(e.into()),
    };
    let m = fit_metrics(&fit, CALIBRATION_REGION, CALIBRATION_POINTS)?;
    println!(
        "terms {}  rmse {:.4e}  sse {:.4e}  max|err| {:.4e}  converged {converged}",
        fit.m(),
        m.rmse,
        m.sse,
        m.max_abs
    );
    for t in &fit.terms {
        println!("  a {:>12.6e}  b {:>12.6e}  c {:>12.6e}", t.a, t.b, t.c);
    }
    if let Some(p) = args.out {
        std::fs::write(&p, serde_json::to_string_pretty(&fit)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}
