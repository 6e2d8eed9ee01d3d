//! Incremental selective decode-and-forward relaying over power-line channels.
//!
//! * [`model`]: log-normal links, Bernoulli-Gaussian noise, thresholds.
//! * [`qexp`]: Gaussian-mixture approximation of `Q(exp(t))` and its refit.
//! * [`analytic`]: outage, relay usage and average BER in closed form.
//! * [`simulator`]: seeded Monte-Carlo protocol simulation.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod model;
pub mod qexp;
pub mod quadrature;
pub mod simulator;
pub mod special;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
