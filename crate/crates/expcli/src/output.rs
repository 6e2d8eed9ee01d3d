//! CSV / JSON / gnuplot writers, the CSV reader and run manifests.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigFile, SweepSpec};
use crate::sweep::SweepRow;

/// CSV column order.
pub const COLUMNS: [&str; 14] = [
    "sweep_value",
    "gamma_sd_th",
    "gamma_sr_th",
    "outage_analytic",
    "outage_mc",
    "outage_mc_se",
    "usage_analytic",
    "usage_mc",
    "usage_mc_se",
    "ber_literal",
    "ber_coherent",
    "ber_mc",
    "ber_mc_se",
    "slots_mc",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("nothing to write: no rows")]
    NoRows,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected CSV header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}, column `{column}`: cannot parse {value:?}")]
    Field {
        line: u64,
        column: &'static str,
        value: String,
    },
}

/// One CSV line. Values are held at the printed precision, so a written and
/// re-read record compares equal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CsvRecord(pub [Option<f64>; 14]);

/// Ten significant digits.
fn render(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

fn rounded(v: Option<f64>) -> Option<f64> {
    v.map(|x| render(Some(x)).parse().expect("rendered float parses"))
}

impl CsvRecord {
    pub fn from_row(row: &SweepRow) -> Self {
        let th = row.thresholds;
        let a = row.analytic;
        let mc = row.mc;
        let raw = [
            Some(row.sweep_value),
            th.map(|t| t.gamma_sd),
            th.map(|t| t.gamma_sr_rd),
            a.map(|a| a.outage),
            mc.map(|m| m.outage),
            mc.map(|m| m.outage_se),
            a.map(|a| a.relay_usage),
            mc.map(|m| m.relay_usage),
            mc.map(|m| m.relay_usage_se),
            a.and_then(|a| a.ber.ber_literal),
            a.and_then(|a| a.ber.ber_coherent),
            mc.map(|m| m.ber),
            mc.map(|m| m.ber_se),
            mc.map(|m| m.slots),
        ];
        CsvRecord(raw.map(rounded))
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        COLUMNS
            .iter()
            .position(|c| *c == column)
            .and_then(|i| self.0[i])
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), OutputError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for row in rows {
        out.write_record(CsvRecord::from_row(row).0.map(render))?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<CsvRecord>, OutputError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        return Err(OutputError::Header(header));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut values = [None; 14];
        for (i, field) in rec.iter().enumerate().take(COLUMNS.len()) {
            if !field.is_empty() {
                values[i] = Some(field.parse().map_err(|_| OutputError::Field {
                    line,
                    column: COLUMNS[i],
                    value: field.to_owned(),
                })?);
            }
        }
        out.push(CsvRecord(values));
    }
    Ok(out)
}

/// Whitespace-separated columns with a `#` header; missing values are `NaN`.
pub fn write_dat<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# {}", COLUMNS.join(" "))?;
    for row in rows {
        let rec = CsvRecord::from_row(row);
        let fields: Vec<String> = rec
            .0
            .iter()
            .map(|v| v.map_or_else(|| "NaN".to_owned(), |x| format!("{x:.9e}")))
            .collect();
        writeln!(w, "{}", fields.join(" "))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| OutputError::Io {
            path: path.to_owned(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Write `rows` to `path`. JSON output is the row array itself, timing included.
pub fn emit(rows: &[SweepRow], format: Format, path: &Path) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::NoRows);
    }
    let mut w = create(path)?;
    match format {
        Format::Csv => write_csv(rows, &mut w)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            w.write_all(b"\n").map_err(io_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn emit_dat(rows: &[SweepRow], path: &Path) -> Result<(), OutputError> {
    let mut w = create(path)?;
    write_dat(rows, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Everything needed to regenerate an output file byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub core_version: String,
    pub preset: Option<String>,
    pub curve: Option<String>,
    /// Normalised configuration; feeding it back to `isdf run` repeats the run.
    pub config: ConfigFile,
    pub config_sha256: String,
    pub seed: u64,
    pub n_trials: u64,
    /// Monte-Carlo seed of grid row `k` is `seed + k`.
    pub row_seeding: String,
    pub workers: usize,
    pub format: Format,
    pub output: PathBuf,
    pub mixture_fit: String,
    pub notes: Vec<String>,
    pub failed_rows: Vec<usize>,
}

impl Manifest {
    pub fn new(spec: &SweepSpec, output: &Path, format: Format, rows: &[SweepRow]) -> Self {
        let json = spec.to_json();
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            core_version: isdf_core::VERSION.to_owned(),
            preset: None,
            curve: None,
            config: spec.to_config_file(),
            config_sha256: format!("{:x}", Sha256::digest(json.as_bytes())),
            seed: spec.seed,
            n_trials: spec.n_trials,
            row_seeding: "seed + row index".to_owned(),
            workers: rayon::current_num_threads(),
            format,
            output: output.to_owned(),
            mixture_fit: "shipped".to_owned(),
            notes: Vec::new(),
            failed_rows: rows
                .iter()
                .filter(|r| r.failed())
                .map(|r| r.index)
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), OutputError> {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }
}

/// `out.csv` → `out.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

/// `fig2.csv` + `r1_d0.4` → `fig2_r1_d0.4.csv`.
pub fn curve_path(output: &Path, label: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sweep");
    let mut name = format!("{stem}_{label}");
    if let Some(ext) = output.extension().and_then(|e| e.to_str()) {
        name.push('.');
        name.push_str(ext);
    }
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{AnalyticRow, BerPair, McRow, Timing};
    use isdf_core::model::Thresholds;

    fn row(i: usize, with_mc: bool) -> SweepRow {
        SweepRow {
            index: i,
            sweep_value: 20.0 + i as f64,
            thresholds: Some(Thresholds {
                gamma_sd: 2.541_963_230_420_281_5,
                gamma_sr_rd: 5.083_926_460_840_563,
            }),
            analytic: Some(AnalyticRow {
                outage: 1.0 / 3.0,
                relay_usage: 0.123_456_789_012_345,
                ber: BerPair {
                    ber_literal: Some(1e-7 / 7.0),
                    ber_coherent: None,
                },
            }),
            quadrature: None,
            mc: with_mc.then_some(McRow {
                outage: 0.25,
                outage_se: 1e-4,
                relay_usage: 0.1,
                relay_usage_se: 3e-4,
                ber: 2e-3,
                ber_se: 1e-6,
                ber_indicator: 2.1e-3,
                ber_indicator_se: 4e-5,
                slots: 1.1,
                n_trials: 1000,
                seed: 7,
            }),
            errors: vec![],
            timing: Timing::default(),
        }
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let rows = vec![row(0, true), row(1, false), row(2, true)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], COLUMNS.join(","));
        assert!(lines[1].starts_with("2.000000000e1,2.541963230e0,5.083926461e0,3.333333333e-1,"));
        // missing engine leaves empty fields
        assert!(lines[2].contains(",,"));
        let back = read_csv(buf.as_slice()).unwrap();
        let expected: Vec<CsvRecord> = rows.iter().map(CsvRecord::from_row).collect();
        assert_eq!(back, expected);
        assert_eq!(back[1].get("ber_coherent"), None);
        assert_eq!(back[0].get("slots_mc"), Some(1.1));
    }

    #[test]
    fn reader_rejects_foreign_header() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes()),
            Err(OutputError::Header(_))
        ));
    }

    #[test]
    fn dat_marks_missing_as_nan() {
        let mut buf = Vec::new();
        write_dat(&[row(0, false)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# sweep_value gamma_sd_th"));
        assert!(text.lines().nth(1).unwrap().contains("NaN"));
    }

    #[test]
    fn empty_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit(&[], Format::Csv, &dir.path().join("x.csv")),
            Err(OutputError::NoRows)
        ));
    }

    #[test]
    fn unwritable_path_reported() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let e = emit(&[row(0, true)], Format::Csv, &blocker.join("out.csv")).unwrap_err();
        assert!(matches!(e, OutputError::Io { .. }), "{e}");
    }

    #[test]
    fn derived_paths() {
        assert_eq!(
            curve_path(Path::new("out/fig2.csv"), "r1_d0.4"),
            Path::new("out/fig2_r1_d0.4.csv")
        );
        assert_eq!(
            manifest_path(Path::new("out/a.csv")),
            Path::new("out/a.manifest.json")
        );
    }
}
