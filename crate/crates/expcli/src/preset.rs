//! Built-in sweeps behind the published outage, BER and relay-usage curves.

use std::fmt;
use std::str::FromStr;

use crate::config::{validate, ConfigFile, SweepSpec, SweepVariable};

/// Relay positions for the relay-usage preset. The curves are labelled by
/// `d_f` only, so these values are a choice, recorded in every manifest.
pub const FIG4_D_F: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Outage vs P_T: R_th ∈ {1, 3}, d_SD ∈ {0.4, 0.8} km, P_L = 60 dB/km.
    Fig2,
    /// Average BER vs P_T: d_SD = 0.4 km, P_L ∈ {60, 80} dB/km, R_th ∈ {1, 3}.
    Fig3,
    /// Relay usage vs P_T: d_SD = 0.4 km, P_L = 60 dB/km, R_th ∈ {1, 3}, d_f ∈ [`FIG4_D_F`].
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Fig2, Preset::Fig3, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
        }
    }

    /// One sweep over P_T per plotted curve.
    pub fn curves(self) -> Vec<Curve> {
        let mut out = Vec::new();
        match self {
            Preset::Fig2 => {
                for r in [1.0, 3.0] {
                    for d in [0.4, 0.8] {
                        out.push(curve(format!("r{r}_d{d}"), d, 60.0, r, 0.5));
                    }
                }
            }
            Preset::Fig3 => {
                for pl in [60.0, 80.0] {
                    for r in [1.0, 3.0] {
                        out.push(curve(format!("pl{pl}_r{r}"), 0.4, pl, r, 0.5));
                    }
                }
            }
            Preset::Fig4 => {
                for r in [1.0, 3.0] {
                    for df in FIG4_D_F {
                        out.push(curve(format!("r{r}_df{df}"), 0.4, 60.0, r, df));
                    }
                }
            }
        }
        out
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (expected fig2, fig3 or fig4)"))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub spec: SweepSpec,
}

fn curve(label: String, d_sd_km: f64, p_l: f64, r_th: f64, d_f: f64) -> Curve {
    let file = ConfigFile {
        d_sd_km: Some(d_sd_km),
        p_l: Some(p_l),
        r_th: Some(r_th),
        d_f: Some(d_f),
        sweep: Some(SweepVariable::PT),
        ..ConfigFile::default()
    };
    Curve {
        label,
        spec: validate(file).expect("preset parameters are valid"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use isdf_core::model::PerLink;

    #[test]
    fn presets_encode_caption_parameters() {
        for p in Preset::ALL {
            for c in p.curves() {
                let b = &c.spec.base;
                assert_eq!(b.sigma_h_db, PerLink::uniform(3.0));
                assert_eq!((b.noise.p, b.noise.eta), (0.1, 10.0));
                assert_eq!(c.spec.grid.first(), Some(&20.0));
                assert_eq!(c.spec.grid.last(), Some(&80.0));
            }
        }
        let f2 = Preset::Fig2.curves();
        assert_eq!(f2.len(), 4);
        assert!(f2.iter().all(|c| c.spec.base.p_l_db_per_km == 60.0));
        let f3 = Preset::Fig3.curves();
        assert!(f3.iter().all(|c| c.spec.base.d_sd_km == 0.4));
        assert_eq!(
            f3.iter()
                .filter(|c| c.spec.base.p_l_db_per_km == 80.0)
                .count(),
            2
        );
        let f4 = Preset::Fig4.curves();
        assert_eq!(f4.len(), 6);
        assert_eq!(f4[0].label, "r1_df0.25");
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig5".parse::<Preset>().is_err());
    }
}
