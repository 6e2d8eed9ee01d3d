//! Sweep configuration: the JSON document format, defaults and validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isdf_core::analytic::BerMode;
use isdf_core::model::{NoiseModel, PerLink, PowerSplit, SystemConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_P: f64 = 0.1;
pub const DEFAULT_ETA: f64 = 10.0;
pub const DEFAULT_SIGMA_H_DB: f64 = 3.0;
pub const DEFAULT_D_F: f64 = 0.5;
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_P_T_GRID: GridSpec = GridSpec::Range {
    start: 20.0,
    stop: 80.0,
    step: 1.0,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("`{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "p_t_db")]
    PT,
    #[serde(rename = "r_th")]
    RTh,
    #[serde(rename = "d_f")]
    DF,
    #[serde(rename = "d_sd")]
    DSd,
    #[serde(rename = "p_l")]
    PL,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PT => "p_t_db",
            SweepVariable::RTh => "r_th",
            SweepVariable::DF => "d_f",
            SweepVariable::DSd => "d_sd",
            SweepVariable::PL => "p_l",
        }
    }

    pub fn apply(self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = *base;
        match self {
            SweepVariable::PT => cfg.p_t_db = value,
            SweepVariable::RTh => cfg.r_th = value,
            SweepVariable::DF => cfg.d_f = value,
            SweepVariable::DSd => cfg.d_sd_km = value,
            SweepVariable::PL => cfg.p_l_db_per_km = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[serde(alias = "a")]
    Analytic,
    #[serde(alias = "m")]
    Montecarlo,
    #[serde(alias = "q")]
    Quadrature,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "a" | "analytic" => Ok(Engine::Analytic),
            "m" | "montecarlo" | "mc" => Ok(Engine::Montecarlo),
            "q" | "quadrature" => Ok(Engine::Quadrature),
            other => Err(format!("unknown engine `{other}` (expected a, m or q)")),
        }
    }
}

/// Nonempty set of engines, ordered analytic, montecarlo, quadrature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Engine>", into = "Vec<Engine>")]
pub struct Engines(BTreeSet<Engine>);

impl Engines {
    pub fn contains(&self, e: Engine) -> bool {
        self.0.contains(&e)
    }

    pub fn iter(&self) -> impl Iterator<Item = Engine> + '_ {
        self.0.iter().copied()
    }
}

impl Default for Engines {
    fn default() -> Self {
        Engines([Engine::Analytic, Engine::Montecarlo].into_iter().collect())
    }
}

impl TryFrom<Vec<Engine>> for Engines {
    type Error = String;

    fn try_from(v: Vec<Engine>) -> Result<Self, Self::Error> {
        if v.is_empty() {
            return Err("at least one engine must be selected".into());
        }
        Ok(Engines(v.into_iter().collect()))
    }
}

impl From<Engines> for Vec<Engine> {
    fn from(e: Engines) -> Self {
        e.0.into_iter().collect()
    }
}

impl FromStr for Engines {
    type Err = String;

    /// Comma-separated list such as `a,m,q`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>, _>>()?;
        Engines::try_from(v)
    }
}

impl fmt::Display for Engines {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .iter()
            .map(|e| match e {
                Engine::Analytic => "analytic",
                Engine::Montecarlo => "montecarlo",
                Engine::Quadrature => "quadrature",
            })
            .collect();
        f.write_str(&names.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerModes {
    PaperLiteral,
    Coherent,
    #[default]
    Both,
}

impl BerModes {
    pub fn includes(self, mode: BerMode) -> bool {
        matches!(
            (self, mode),
            (BerModes::Both, _)
                | (BerModes::PaperLiteral, BerMode::PaperLiteral)
                | (BerModes::Coherent, BerMode::Coherent)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    /// Expand to explicit values; ranges include `stop` when it lies on the lattice.
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0 && start.is_finite() && stop.is_finite()) {
                    return Err(invalid(
                        "grid",
                        "range needs finite start/stop and step > 0",
                    ));
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n < 0.0 {
                    return Err(invalid("grid", "range stop lies below start"));
                }
                (0..=n as usize).map(|k| start + k as f64 * step).collect()
            }
        };
        if v.is_empty() {
            return Err(invalid("grid", "grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("grid", "grid values must be finite"));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid", "grid must be strictly increasing"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaH {
    Uniform(f64),
    PerLink(PerLink<f64>),
}

/// The on-disk document. Every field is optional except those the sweep
/// cannot do without; see [`parse_config_str`] for the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_t_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_split: Option<PowerSplit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_sd_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_f: Option<f64>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        alias = "p_l_db_per_km"
    )]
    pub p_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_th: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Background noise variance. Defaults to `1/(1+p·η)`, i.e. unit average noise power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_w2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_h_db: Option<SigmaH>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepVariable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engines: Option<Engines>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ber_mode: Option<BerModes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub sweep_variable: SweepVariable,
    pub grid: Vec<f64>,
    pub engines: Engines,
    pub ber_mode: BerModes,
    pub n_trials: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl SweepSpec {
    /// Fully explicit document that parses back to `self`.
    pub fn to_config_file(&self) -> ConfigFile {
        let b = &self.base;
        let s = b.sigma_h_db;
        let sigma_h = if s.sd == s.sr && s.sr == s.rd {
            SigmaH::Uniform(s.sd)
        } else {
            SigmaH::PerLink(s)
        };
        ConfigFile {
            p_t_db: Some(b.p_t_db),
            power_split: Some(b.power_split),
            d_sd_km: Some(b.d_sd_km),
            d_f: Some(b.d_f),
            p_l: Some(b.p_l_db_per_km),
            r_th: Some(b.r_th),
            p: Some(b.noise.p),
            eta: Some(b.noise.eta),
            sigma_w2: Some(b.noise.sigma_w2),
            sigma_h_db: Some(sigma_h),
            sweep: Some(self.sweep_variable),
            grid: Some(GridSpec::List(self.grid.clone())),
            engines: Some(self.engines.clone()),
            ber_mode: Some(self.ber_mode),
            n_trials: Some(self.n_trials),
            seed: Some(self.seed),
            output_path: self.output_path.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_config_file()).expect("config serialises")
    }

    /// The base configuration with the swept variable set to `value`.
    pub fn system_at(&self, value: f64) -> SystemConfig {
        self.sweep_variable.apply(&self.base, value)
    }
}

pub fn parse_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SweepSpec, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ConfigFile =
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    validate(file)
}

fn require(
    field: &'static str,
    v: Option<f64>,
    swept: bool,
    grid: &[f64],
) -> Result<f64, ConfigError> {
    match (v, swept) {
        (Some(x), _) => Ok(x),
        // the swept value is set per row; seed the base with the first point
        (None, true) => Ok(grid[0]),
        (None, false) => Err(invalid(field, "missing (required unless swept)")),
    }
}

fn check(field: &'static str, v: f64, ok: bool, expected: &str) -> Result<(), ConfigError> {
    if ok && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} outside {expected}")))
    }
}

pub fn validate(file: ConfigFile) -> Result<SweepSpec, ConfigError> {
    let sweep = file.sweep.unwrap_or(SweepVariable::PT);
    let grid = match (&file.grid, sweep) {
        (Some(g), _) => g.values()?,
        (None, SweepVariable::PT) => DEFAULT_P_T_GRID.values()?,
        (None, _) => {
            return Err(invalid(
                "grid",
                "required when sweeping anything but p_t_db",
            ))
        }
    };

    let p_t_db = require("p_t_db", file.p_t_db, sweep == SweepVariable::PT, &grid)?;
    let d_sd_km = require("d_sd_km", file.d_sd_km, sweep == SweepVariable::DSd, &grid)?;
    let p_l = require("p_l", file.p_l, sweep == SweepVariable::PL, &grid)?;
    let r_th = require("r_th", file.r_th, sweep == SweepVariable::RTh, &grid)?;
    let d_f = file.d_f.unwrap_or(if sweep == SweepVariable::DF {
        grid[0]
    } else {
        DEFAULT_D_F
    });
    let p = file.p.unwrap_or(DEFAULT_P);
    let eta = file.eta.unwrap_or(DEFAULT_ETA);

    check("p_t_db", p_t_db, true, "finite values")?;
    check("d_sd_km", d_sd_km, d_sd_km > 0.0, "(0, ∞)")?;
    check("p_l", p_l, p_l >= 0.0, "[0, ∞)")?;
    check("r_th", r_th, r_th > 0.0, "(0, ∞)")?;
    check("d_f", d_f, d_f > 0.0 && d_f < 1.0, "(0, 1)")?;
    check("p", p, (0.0..=1.0).contains(&p), "[0, 1]")?;
    check("eta", eta, eta >= 0.0, "[0, ∞)")?;
    let sigma_w2 = file.sigma_w2.unwrap_or(1.0 / (1.0 + p * eta));
    check("sigma_w2", sigma_w2, sigma_w2 > 0.0, "(0, ∞)")?;

    let sigma_h_db = match file
        .sigma_h_db
        .unwrap_or(SigmaH::Uniform(DEFAULT_SIGMA_H_DB))
    {
        SigmaH::Uniform(s) => PerLink::uniform(s),
        SigmaH::PerLink(l) => l,
    };
    for s in [sigma_h_db.sd, sigma_h_db.sr, sigma_h_db.rd] {
        check("sigma_h_db", s, s >= 0.0, "[0, ∞)")?;
    }

    let n_trials = file.n_trials.unwrap_or(DEFAULT_TRIALS);
    if n_trials == 0 {
        return Err(invalid("n_trials", "must be at least 1"));
    }

    let noise = NoiseModel::new(p, eta, sigma_w2).map_err(|e| invalid("p", e.to_string()))?;
    let base = SystemConfig {
        p_t_db,
        power_split: file.power_split.unwrap_or(PowerSplit::Full),
        d_sd_km,
        d_f,
        p_l_db_per_km: p_l,
        r_th,
        noise,
        sigma_h_db,
    };

    Ok(SweepSpec {
        base,
        sweep_variable: sweep,
        grid,
        engines: file.engines.unwrap_or_default(),
        ber_mode: file.ber_mode.unwrap_or_default(),
        n_trials,
        seed: file.seed.unwrap_or(DEFAULT_SEED),
        output_path: file.output_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 3, "sweep": "p_t_db",
        "grid": {"start": 20, "stop": 80, "step": 1}}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_config_str(MINIMAL).unwrap();
        assert_eq!(s.grid.len(), 61);
        assert_eq!(s.grid[0], 20.0);
        assert_eq!(s.grid[60], 80.0);
        assert_eq!(s.base.noise.p, 0.1);
        assert_eq!(s.base.noise.eta, 10.0);
        assert_eq!(s.base.noise.sigma_w2, 0.5);
        assert_eq!(s.base.sigma_h_db, PerLink::uniform(3.0));
        assert_eq!(s.base.d_f, 0.5);
        assert_eq!(s.base.power_split, PowerSplit::Full);
        assert_eq!(s.n_trials, DEFAULT_TRIALS);
        assert_eq!(s.ber_mode, BerModes::Both);
        assert!(s.engines.contains(Engine::Analytic) && s.engines.contains(Engine::Montecarlo));
    }

    #[test]
    fn out_of_range_names_field() {
        let e =
            parse_config_str(r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 3, "d_f": 1.2}"#).unwrap_err();
        assert!(
            matches!(e, ConfigError::Invalid { field: "d_f", .. }),
            "{e}"
        );
        assert!(e.to_string().contains("d_f"));
        let e =
            parse_config_str(r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 3, "p": 1.5}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { field: "p", .. }));
    }

    #[test]
    fn schema_errors_carry_path() {
        let e =
            parse_config_str(r#"{"d_sd_km": 0.4, "sigma_h_db": {"sd": 3, "sr": "x", "rd": 3}}"#)
                .unwrap_err();
        assert!(matches!(e, ConfigError::Schema { .. }), "{e}");
        let e = parse_config_str(r#"{"d_sd_km": "far"}"#).unwrap_err();
        assert!(e.to_string().contains("d_sd_km"), "{e}");
        let e = parse_config_str(r#"{"bogus": 1}"#).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn grid_rules() {
        assert!(GridSpec::List(vec![]).values().is_err());
        assert!(GridSpec::List(vec![1.0, 1.0]).values().is_err());
        assert!(GridSpec::List(vec![2.0, 1.0]).values().is_err());
        let g = GridSpec::Range {
            start: 0.1,
            stop: 0.9,
            step: 0.2,
        }
        .values()
        .unwrap();
        assert_eq!(g.len(), 5);
        assert!(
            parse_config_str(r#"{"d_sd_km": 0.4, "p_l": 60, "p_t_db": 50, "sweep": "r_th"}"#)
                .is_err()
        );
    }

    #[test]
    fn missing_required_field() {
        let e = parse_config_str(r#"{"d_sd_km": 0.4, "r_th": 3}"#).unwrap_err();
        assert!(matches!(e, ConfigError::Invalid { field: "p_l", .. }));
    }

    #[test]
    fn normalized_round_trip() {
        let s = parse_config_str(MINIMAL).unwrap();
        let back = parse_config_str(&s.to_json()).unwrap();
        assert_eq!(s, back);
        let per_link = r#"{"d_sd_km": 0.4, "p_l": 60, "p_t_db": 50, "sweep": "r_th", "grid": [1, 2, 3],
            "sigma_h_db": {"sd": 3, "sr": 2, "rd": 4}, "engines": ["q", "a"], "power_split": "half"}"#;
        let s = parse_config_str(per_link).unwrap();
        assert_eq!(s, parse_config_str(&s.to_json()).unwrap());
        assert_eq!(s.engines.to_string(), "analytic,quadrature");
    }

    #[test]
    fn engines_from_cli_list() {
        let e: Engines = "a,m,q".parse().unwrap();
        assert_eq!(e.iter().count(), 3);
        assert!("".parse::<Engines>().is_err());
        assert!("a,x".parse::<Engines>().is_err());
    }
}
