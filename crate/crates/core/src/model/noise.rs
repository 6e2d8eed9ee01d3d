use serde::{Deserialize, Serialize};

use super::{check_finite_range, ModelError, Result};

/// Bernoulli-Gaussian additive noise: background Gaussian noise of variance
/// `sigma_w2`, plus with probability `p` an impulsive Gaussian component of
/// variance `eta·sigma_w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p: f64,
    pub eta: f64,
    pub sigma_w2: f64,
}

impl NoiseModel {
    pub fn new(p: f64, eta: f64, sigma_w2: f64) -> Result<Self> {
        let n = NoiseModel { p, eta, sigma_w2 };
        n.validate()?;
        Ok(n)
    }

    /// Background variance chosen so the average noise power is exactly one.
    pub fn with_unit_average_power(p: f64, eta: f64) -> Result<Self> {
        Self::new(p, eta, 1.0 / (1.0 + p * eta))
    }

    pub fn validate(&self) -> Result<()> {
        check_finite_range("p", self.p, (0.0..=1.0).contains(&self.p), "[0, 1]")?;
        check_finite_range("eta", self.eta, self.eta >= 0.0, ">= 0")?;
        if !(self.sigma_w2 > 0.0) || !self.sigma_w2.is_finite() {
            return Err(ModelError::NonPositive {
                name: "sigma_w2",
                value: self.sigma_w2,
            });
        }
        Ok(())
    }

    pub fn impulsive_variance(&self) -> f64 {
        self.eta * self.sigma_w2
    }

    /// `N0 = σ_W²(1 + p·η)`.
    pub fn average_power(&self) -> f64 {
        self.sigma_w2 * (1.0 + self.p * self.eta)
    }

    pub fn mixture(&self) -> NoiseMixture {
        let pe = 1.0 + self.p * self.eta;
        NoiseMixture {
            weights: [1.0 - self.p, self.p],
            variances: [self.sigma_w2, self.sigma_w2 + self.impulsive_variance()],
            alphas: [pe / 2.0, pe / (2.0 * (1.0 + self.eta))],
        }
    }
}

/// Two-state view of the noise used by the capacity and BER expressions:
/// state weights `p_j`, per-state variances `σ_j²`, and SNR scalings `α_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMixture {
    pub weights: [f64; 2],
    pub variances: [f64; 2],
    pub alphas: [f64; 2],
}

impl NoiseMixture {
    /// `Π_j α_j^{-p_j}`, the common factor of both SNR thresholds.
    pub fn threshold_scale(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.alphas)
            .map(|(&w, a)| a.powf(-w))
            .product()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights
            .iter()
            .copied()
            .zip(self.alphas.iter().copied())
    }
}

/// Instantaneous mixture capacity `Σ_j p_j log2(1 + α_j γ)` in bits/s/Hz.
pub fn capacity(gamma: f64, noise: &NoiseModel) -> f64 {
    noise
        .mixture()
        .iter()
        .map(|(w, a)| {
            if w == 0.0 {
                0.0
            } else {
                w * (a * gamma).ln_1p()
            }
        })
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// Linear SNR thresholds for the direct hop and for each relayed hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub gamma_sd: f64,
    pub gamma_sr_rd: f64,
}

/// High-SNR inversion of [`capacity`]: the direct hop must carry `r_th`, each
/// half-duplex relayed hop `2·r_th`.
pub fn thresholds(r_th: f64, noise: &NoiseModel) -> Result<Thresholds> {
    if !(r_th > 0.0) || !r_th.is_finite() {
        return Err(ModelError::NonPositive {
            name: "r_th",
            value: r_th,
        });
    }
    let scale = noise.mixture().threshold_scale();
    Ok(Thresholds {
        gamma_sd: scale * r_th.exp2(),
        gamma_sr_rd: scale * (2.0 * r_th).exp2(),
    })
}
