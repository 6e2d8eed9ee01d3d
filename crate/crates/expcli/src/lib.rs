//! Parameter sweeps over the ISDF relaying model, written as CSV/JSON data.

pub mod config;
pub mod output;
pub mod preset;
pub mod sweep;

pub use config::{
    parse_config, parse_config_str, ConfigError, Engine, Engines, SweepSpec, SweepVariable,
};
pub use output::{emit, read_csv, write_csv, CsvRecord, Format, Manifest};
pub use preset::{Curve, Preset};
pub use sweep::{run_sweep, SweepRow};
