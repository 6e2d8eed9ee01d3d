//! Row-parallel sweep execution.

use std::time::Instant;

use isdf_core::analytic::{
    average_ber, average_ber_with, outage_probability, relay_usage, BerMode, PartialEngine,
    SystemDerived,
};
use isdf_core::model::Thresholds;
use isdf_core::qexp::MixtureFit;
use isdf_core::simulator::simulate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Engine, SweepSpec};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BerPair {
    pub ber_literal: Option<f64>,
    pub ber_coherent: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub outage: f64,
    pub relay_usage: f64,
    #[serde(flatten)]
    pub ber: BerPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub outage: f64,
    pub outage_se: f64,
    pub relay_usage: f64,
    pub relay_usage_se: f64,
    /// Semi-analytic estimate: exact per-round error probability averaged.
    pub ber: f64,
    pub ber_se: f64,
    /// Bit-error counting on the same rounds.
    pub ber_indicator: f64,
    pub ber_indicator_se: f64,
    pub slots: f64,
    pub n_trials: u64,
    pub seed: u64,
}

/// Wall-clock seconds per engine.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub analytic_s: f64,
    pub quadrature_s: f64,
    pub montecarlo_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub sweep_value: f64,
    pub thresholds: Option<Thresholds>,
    pub analytic: Option<AnalyticRow>,
    pub quadrature: Option<BerPair>,
    pub mc: Option<McRow>,
    pub errors: Vec<String>,
    pub timing: Timing,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Evaluate every grid point. Rows run concurrently and come back in grid
/// order; row `k` simulates with seed `spec.seed + k`.
pub fn run_sweep(spec: &SweepSpec, fit: &MixtureFit) -> Vec<SweepRow> {
    spec.grid
        .par_iter()
        .enumerate()
        .map(|(index, &value)| run_row(spec, fit, index, value))
        .collect()
}

fn run_row(spec: &SweepSpec, fit: &MixtureFit, index: usize, value: f64) -> SweepRow {
    let mut row = SweepRow {
        index,
        sweep_value: value,
        thresholds: None,
        analytic: None,
        quadrature: None,
        mc: None,
        errors: Vec::new(),
        timing: Timing::default(),
    };
    let cfg = spec.system_at(value);
    let sys = match cfg
        .validate()
        .and_then(|()| SystemDerived::from_config(&cfg))
    {
        Ok(s) => s,
        Err(e) => {
            row.errors
                .push(format!("{} = {value}: {e}", spec.sweep_variable.name()));
            return row;
        }
    };
    row.thresholds = Some(sys.thresholds);
    let modes = [BerMode::PaperLiteral, BerMode::Coherent];

    if spec.engines.contains(Engine::Analytic) {
        let t = Instant::now();
        let ber = |m| spec.ber_mode.includes(m).then(|| average_ber(&sys, fit, m));
        row.analytic = Some(AnalyticRow {
            outage: outage_probability(&sys),
            relay_usage: relay_usage(&sys),
            ber: BerPair {
                ber_literal: ber(modes[0]),
                ber_coherent: ber(modes[1]),
            },
        });
        row.timing.analytic_s = t.elapsed().as_secs_f64();
    }

    if spec.engines.contains(Engine::Quadrature) {
        let t = Instant::now();
        let mut pair = BerPair::default();
        for m in modes.into_iter().filter(|&m| spec.ber_mode.includes(m)) {
            match average_ber_with(&sys, PartialEngine::Quadrature, m) {
                Ok(v) if m == BerMode::PaperLiteral => pair.ber_literal = Some(v),
                Ok(v) => pair.ber_coherent = Some(v),
                Err(e) => row.errors.push(format!("quadrature ({m:?}): {e}")),
            }
        }
        row.quadrature = Some(pair);
        row.timing.quadrature_s = t.elapsed().as_secs_f64();
    }

    if spec.engines.contains(Engine::Montecarlo) {
        let t = Instant::now();
        let seed = spec.seed.wrapping_add(index as u64);
        match simulate(&sys, spec.n_trials, seed) {
            Ok(s) => {
                row.mc = Some(McRow {
                    outage: s.outage.mean,
                    outage_se: s.outage.std_error,
                    relay_usage: s.relay_usage.mean,
                    relay_usage_se: s.relay_usage.std_error,
                    ber: s.ber_semianalytic.mean,
                    ber_se: s.ber_semianalytic.std_error,
                    ber_indicator: s.ber.mean,
                    ber_indicator_se: s.ber.std_error,
                    slots: s.slots.mean,
                    n_trials: spec.n_trials,
                    seed,
                })
            }
            Err(e) => row.errors.push(format!("montecarlo: {e}")),
        }
        row.timing.montecarlo_s = t.elapsed().as_secs_f64();
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;
    use isdf_core::qexp::shipped_fit;

    #[test]
    fn single_point_grid_gives_one_row() {
        let spec = parse_config_str(
            r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 3, "grid": [50], "n_trials": 1000}"#,
        )
        .unwrap();
        let rows = run_sweep(&spec, &shipped_fit());
        assert_eq!(rows.len(), 1);
        assert!(rows[0].analytic.is_some() && rows[0].mc.is_some() && rows[0].quadrature.is_none());
    }

    #[test]
    fn bad_row_is_recorded_and_sweep_continues() {
        let spec = parse_config_str(
            r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 3, "p_t_db": 50, "sweep": "d_f", "grid": [0.5, 1.5], "engines": ["a"]}"#,
        )
        .unwrap();
        let rows = run_sweep(&spec, &shipped_fit());
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].failed());
        assert!(rows[1].failed() && rows[1].analytic.is_none());
        assert!(rows[1].errors[0].contains("d_f"));
    }

    #[test]
    fn ber_mode_selection() {
        let spec = parse_config_str(
            r#"{"d_sd_km": 0.4, "p_l": 60, "r_th": 1, "grid": [40], "engines": ["a", "q"], "ber_mode": "coherent"}"#,
        )
        .unwrap();
        let row = &run_sweep(&spec, &shipped_fit())[0];
        let a = row.analytic.unwrap();
        assert!(a.ber.ber_literal.is_none() && a.ber.ber_coherent.is_some());
        let q = row.quadrature.unwrap();
        assert!(q.ber_literal.is_none() && q.ber_coherent.is_some());
    }
}
