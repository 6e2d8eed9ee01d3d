use serde::{Deserialize, Serialize};

use super::{check_finite_range, received_power, ModelError, NoiseModel, Result};
use crate::special::{phi_pdf, q};

/// Parameters of a log-normal SNR: `ln γ ~ N(mu, sigma²)`.
///
/// `sigma == 0` is a valid, deterministic channel sitting at `exp(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrParams {
    pub mu: f64,
    pub sigma: f64,
}

impl SnrParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        check_finite_range("mu_gamma", mu, true, "finite")?;
        check_finite_range("sigma_gamma", sigma, sigma >= 0.0, ">= 0")?;
        Ok(SnrParams { mu, sigma })
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    /// `exp(mu + sigma²/2)`.
    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    /// `F(w) = Pr[γ <= w] = 1 - Q((ln w - mu)/sigma)`.
    pub fn cdf(&self, w: f64) -> Result<f64> {
        if w < 0.0 || w.is_nan() {
            return Err(ModelError::OutOfRange {
                name: "w",
                value: w,
                expected: ">= 0",
            });
        }
        Ok(self.prob_below(w))
    }

    /// `Pr[γ < w]` for `w >= 0`, written as `Q((mu - ln w)/sigma)` so small
    /// lower-tail probabilities keep their relative precision.
    pub fn prob_below(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        let lw = w.ln();
        if self.sigma == 0.0 {
            return if self.mu <= lw { 1.0 } else { 0.0 };
        }
        q((self.mu - lw) / self.sigma)
    }

    /// `Pr[γ > w] = Q((ln w - mu)/sigma)`.
    pub fn prob_above(&self, w: f64) -> f64 {
        if w <= 0.0 {
            return 1.0;
        }
        let lw = w.ln();
        if self.sigma == 0.0 {
            return if self.mu > lw { 1.0 } else { 0.0 };
        }
        q((lw - self.mu) / self.sigma)
    }

    /// Log-normal density; zero for `w <= 0` and for the degenerate channel.
    pub fn pdf(&self, w: f64) -> f64 {
        if w <= 0.0 || self.sigma == 0.0 {
            return 0.0;
        }
        phi_pdf((w.ln() - self.mu) / self.sigma) / (w * self.sigma)
    }
}

/// One hop's statistical description: cable length, fading spread, received
/// power, and the SNR distribution those imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub d_km: f64,
    pub sigma_h_db: f64,
    /// Standard deviation of `ln h`.
    pub sigma_h: f64,
    /// Mean of `ln h`; pinned to `-sigma_h²` so that `E[h²] = 1`.
    pub mu_h: f64,
    /// Received power, linear.
    pub p_r: f64,
    pub snr: SnrParams,
}

impl LinkModel {
    pub fn new(
        d_km: f64,
        sigma_h_db: f64,
        p_tx_db: f64,
        p_l_db_per_km: f64,
        noise: &NoiseModel,
    ) -> Result<Self> {
        check_finite_range("sigma_h_db", sigma_h_db, sigma_h_db >= 0.0, ">= 0")?;
        let p_r = received_power(p_tx_db, d_km, p_l_db_per_km)?;
        let sigma_h = sigma_h_db * std::f64::consts::LN_10 / 10.0;
        let mut link = LinkModel {
            d_km,
            sigma_h_db,
            sigma_h,
            mu_h: -sigma_h * sigma_h,
            p_r,
            snr: SnrParams {
                mu: 0.0,
                sigma: 0.0,
            },
        };
        link.snr = snr_params(&link, noise)?;
        Ok(link)
    }

    /// Link with a prescribed SNR distribution and no physical backing, for
    /// evaluating expressions directly in `(mu_gamma, sigma_gamma)`.
    pub fn from_snr(snr: SnrParams) -> Self {
        let sigma_h = snr.sigma / 2.0;
        LinkModel {
            d_km: 0.0,
            sigma_h_db: sigma_h * 10.0 / std::f64::consts::LN_10,
            sigma_h,
            mu_h: -sigma_h * sigma_h,
            p_r: f64::NAN,
            snr,
        }
    }
}

/// `mu_gamma = 2·mu_h + ln(P_R/N0)`, `sigma_gamma = 2·sigma_h`.
pub fn snr_params(link: &LinkModel, noise: &NoiseModel) -> Result<SnrParams> {
    let n0 = noise.average_power();
    if !(link.p_r > 0.0) {
        return Err(ModelError::NonPositive {
            name: "p_r",
            value: link.p_r,
        });
    }
    if !(n0 > 0.0) {
        return Err(ModelError::NonPositive {
            name: "N0",
            value: n0,
        });
    }
    SnrParams::new(2.0 * link.mu_h + (link.p_r / n0).ln(), 2.0 * link.sigma_h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_db_spread_conversion() {
        let noise = NoiseModel::new(0.1, 10.0, 1.0).unwrap();
        let l = LinkModel::new(0.2, 3.0, 45.0, 60.0, &noise).unwrap();
        assert_relative_eq!(l.sigma_h, 0.690_775_5, max_relative = 1e-6);
        assert_relative_eq!(l.mu_h, -0.477_170_8, max_relative = 1e-6);
        assert_relative_eq!(l.snr.sigma, 1.381_551, max_relative = 1e-6);
        assert_relative_eq!(l.snr.sigma, 2.0 * l.sigma_h, max_relative = 1e-15);
        // p_r = 33 dB ≈ 1995.26, N0 = 2
        assert_relative_eq!(l.snr.mu, 5.951_0, epsilon = 1e-4);
        assert_relative_eq!(
            l.snr.mu,
            2.0 * l.mu_h + (l.p_r / noise.average_power()).ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn zero_spread_is_deterministic() {
        let noise = NoiseModel::new(0.1, 10.0, 1.0).unwrap();
        let l = LinkModel::new(0.3, 0.0, 40.0, 60.0, &noise).unwrap();
        assert_eq!(l.snr.sigma, 0.0);
        assert_eq!(l.mu_h, 0.0);
        let g = l.snr.median();
        assert_eq!(l.snr.prob_below(g * 0.999), 0.0);
        assert_eq!(l.snr.prob_below(g * 1.001), 1.0);
    }

    #[test]
    fn non_positive_power_rejected() {
        let noise = NoiseModel::new(0.1, 10.0, 1.0).unwrap();
        let mut l = LinkModel::new(0.3, 3.0, 40.0, 60.0, &noise).unwrap();
        l.p_r = 0.0;
        assert!(snr_params(&l, &noise).is_err());
    }

    #[test]
    fn cdf_median_and_limits() {
        let s = SnrParams::new(2.3, 1.4).unwrap();
        assert_relative_eq!(s.cdf(s.median()).unwrap(), 0.5, max_relative = 1e-12);
        assert_eq!(s.cdf(0.0).unwrap(), 0.0);
        assert!(s.cdf(1e-300).unwrap() < 1e-100);
        assert_eq!(s.cdf(f64::INFINITY).unwrap(), 1.0);
        assert!(s.cdf(-1.0).is_err());
    }

    #[test]
    fn cdf_nondecreasing_on_grid() {
        let s = SnrParams::new(4.0, 1.38).unwrap();
        let vals: Vec<f64> = (0..1000)
            .map(|i| s.cdf(10f64.powf(-3.0 + 8.0 * i as f64 / 999.0)).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn below_and_above_complement() {
        let s = SnrParams::new(1.0, 0.8).unwrap();
        for w in [0.1, 1.0, 2.7, 30.0] {
            assert_relative_eq!(s.prob_below(w) + s.prob_above(w), 1.0, max_relative = 1e-14);
        }
    }
}
