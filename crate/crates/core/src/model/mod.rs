//! Statistical description of a three-node power-line relaying link.
//!
//! Everything downstream (closed forms, simulator, sweeps) is driven from the
//! types in this module: a [`NoiseModel`] for the Bernoulli-Gaussian noise, a
//! [`LinkModel`] per hop carrying the log-normal SNR parameters, and a
//! [`SystemConfig`] tying the source, relay and destination together.

mod link;
mod noise;
mod sampling;
mod system;
mod units;

pub use link::{snr_params, LinkModel, SnrParams};
pub use noise::{capacity, thresholds, NoiseMixture, NoiseModel, Thresholds};
pub use sampling::{sample_channel_gain, sample_noise, sample_snr};
pub use system::{Hop, PerLink, PowerSplit, SystemConfig};
pub use units::{db_to_linear, linear_to_db, received_power};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("linear power must be non-negative, got {0}")]
    NegativeLinear(f64),
    #[error("cable length must be non-negative, got {0} km")]
    NegativeDistance(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn check_finite_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
