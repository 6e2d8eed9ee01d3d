use serde::{Deserialize, Serialize};

use super::{check_finite_range, LinkModel, ModelError, NoiseModel, Result};

/// How the total power budget `P_T` maps to each transmitting node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerSplit {
    /// `P_T/2` per node.
    Half,
    /// Each node transmits `P_T`.
    Full,
}

impl PowerSplit {
    /// Offset in dB from total to per-node power.
    pub fn offset_db(self) -> f64 {
        match self {
            PowerSplit::Half => -10.0 * 2f64.log10(),
            PowerSplit::Full => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    SourceDestination,
    SourceRelay,
    RelayDestination,
}

/// One value per hop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerLink<T> {
    pub sd: T,
    pub sr: T,
    pub rd: T,
}

impl<T: Copy> PerLink<T> {
    pub fn uniform(v: T) -> Self {
        PerLink {
            sd: v,
            sr: v,
            rd: v,
        }
    }

    pub fn get(&self, hop: Hop) -> T {
        match hop {
            Hop::SourceDestination => self.sd,
            Hop::SourceRelay => self.sr,
            Hop::RelayDestination => self.rd,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(T) -> U) -> PerLink<U> {
        PerLink {
            sd: f(self.sd),
            sr: f(self.sr),
            rd: f(self.rd),
        }
    }
}

/// Full source/relay/destination description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Total transmit power `P_T` in dB.
    pub p_t_db: f64,
    pub power_split: PowerSplit,
    pub d_sd_km: f64,
    /// Relay position as a fraction of `d_sd_km`, measured from the source.
    pub d_f: f64,
    pub p_l_db_per_km: f64,
    /// Target rate in bits/s/Hz.
    pub r_th: f64,
    pub noise: NoiseModel,
    pub sigma_h_db: PerLink<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        check_finite_range("p_t_db", self.p_t_db, true, "finite")?;
        if !(self.d_sd_km > 0.0) || !self.d_sd_km.is_finite() {
            return Err(ModelError::NonPositive {
                name: "d_sd_km",
                value: self.d_sd_km,
            });
        }
        check_finite_range("d_f", self.d_f, self.d_f > 0.0 && self.d_f < 1.0, "(0, 1)")?;
        check_finite_range(
            "p_l_db_per_km",
            self.p_l_db_per_km,
            self.p_l_db_per_km >= 0.0,
            ">= 0",
        )?;
        if !(self.r_th > 0.0) || !self.r_th.is_finite() {
            return Err(ModelError::NonPositive {
                name: "r_th",
                value: self.r_th,
            });
        }
        for s in [self.sigma_h_db.sd, self.sigma_h_db.sr, self.sigma_h_db.rd] {
            check_finite_range("sigma_h_db", s, s >= 0.0, ">= 0")?;
        }
        self.noise.validate()
    }

    /// Per-node transmit power in dB.
    pub fn node_power_db(&self) -> f64 {
        self.p_t_db + self.power_split.offset_db()
    }

    pub fn distances_km(&self) -> PerLink<f64> {
        PerLink {
            sd: self.d_sd_km,
            sr: self.d_f * self.d_sd_km,
            rd: (1.0 - self.d_f) * self.d_sd_km,
        }
    }

    pub fn links(&self) -> Result<PerLink<LinkModel>> {
        self.validate()?;
        let d = self.distances_km();
        let p = self.node_power_db();
        let make = |d_km, s| LinkModel::new(d_km, s, p, self.p_l_db_per_km, &self.noise);
        Ok(PerLink {
            sd: make(d.sd, self.sigma_h_db.sd)?,
            sr: make(d.sr, self.sigma_h_db.sr)?,
            rd: make(d.rd, self.sigma_h_db.rd)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> SystemConfig {
        SystemConfig {
            p_t_db: 48.0,
            power_split: PowerSplit::Half,
            d_sd_km: 0.4,
            d_f: 0.3,
            p_l_db_per_km: 60.0,
            r_th: 3.0,
            noise: NoiseModel::new(0.1, 10.0, 1.0).unwrap(),
            sigma_h_db: PerLink::uniform(3.0),
        }
    }

    #[test]
    fn hop_lengths_add_up() {
        let d = base().distances_km();
        assert_relative_eq!(d.sr + d.rd, d.sd, max_relative = 1e-15);
    }

    #[test]
    fn half_split_subtracts_three_db() {
        let c = base();
        assert_relative_eq!(
            c.node_power_db(),
            48.0 - 3.010_299_956_639_812,
            epsilon = 1e-12
        );
        let full = SystemConfig {
            power_split: PowerSplit::Full,
            ..c
        };
        assert_eq!(full.node_power_db(), 48.0);
    }

    #[test]
    fn relay_fraction_must_be_interior() {
        for d_f in [0.0, 1.0, 1.2, -0.1] {
            let c = SystemConfig { d_f, ..base() };
            assert!(matches!(
                c.validate(),
                Err(ModelError::OutOfRange { name: "d_f", .. })
            ));
        }
    }

    #[test]
    fn links_follow_distances() {
        let l = base().links().unwrap();
        // shorter hop, stronger median SNR
        assert!(l.sr.snr.mu > l.rd.snr.mu);
        assert!(l.rd.snr.mu > l.sd.snr.mu);
        assert_eq!(l.sd.snr.sigma, l.sr.snr.sigma);
    }
}
