//! Seeded Monte-Carlo simulation of the incremental selective DF protocol.
//!
//! Trials are grouped in fixed blocks of [`BLOCK_TRIALS`]. Block `k` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, and every trial consumes
//! exactly three normals and three uniforms, so the sample path is a function
//! of `(seed, n_trials)` alone. Blocks run in parallel and are merged in index
//! order, so the thread count never changes a result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{instantaneous_ber, SystemDerived};
use crate::model::sample_snr;

pub const BLOCK_TRIALS: u64 = 16_384;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("n_trials must be at least 1")]
    ZeroTrials,
}

/// One protocol round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub gamma_sd: f64,
    pub gamma_sr: f64,
    pub gamma_rd: f64,
    pub relay_used: bool,
    pub outage: bool,
    pub bit_error: bool,
    pub slots_used: u8,
    /// Exact error probability of this round given the sampled SNRs.
    pub error_probability: f64,
}

/// Sample a round: three SNRs, then the bit-error draws for the path taken.
///
/// The relayed path flags an error iff exactly one of the SR decode and the
/// RD detection fails (a wrong relay decision flipped again cancels out).
pub fn run_trial<R: Rng + ?Sized>(rng: &mut R, sys: &SystemDerived) -> TrialOutcome {
    let gamma_sd = sample_snr(rng, &sys.snr.sd);
    let gamma_sr = sample_snr(rng, &sys.snr.sr);
    let gamma_rd = sample_snr(rng, &sys.snr.rd);
    let u: [f64; 3] = [rng.random(), rng.random(), rng.random()];

    let th = &sys.thresholds;
    let sd_fail = gamma_sd < th.gamma_sd;
    let sr_pass = gamma_sr >= th.gamma_sr_rd;
    let relay_used = sd_fail && sr_pass;
    let outage = sd_fail && (!sr_pass || gamma_rd < th.gamma_sr_rd);

    let (bit_error, error_probability) = if relay_used {
        let pe_sr = instantaneous_ber(gamma_sr, &sys.mixture);
        let pe_rd = instantaneous_ber(gamma_rd, &sys.mixture);
        let flipped = (u[1] < pe_sr) != (u[2] < pe_rd);
        (flipped, pe_sr * (1.0 - pe_rd) + (1.0 - pe_sr) * pe_rd)
    } else {
        let pe = instantaneous_ber(gamma_sd, &sys.mixture);
        (u[0] < pe, pe)
    };

    TrialOutcome {
        gamma_sd,
        gamma_sr,
        gamma_rd,
        relay_used,
        outage,
        bit_error,
        slots_used: if relay_used { 2 } else { 1 },
        error_probability,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Outage,
    RelayUsage,
    Ber,
    Slots,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_trials: u64,
    pub seed: u64,
}

impl McEstimate {
    fn indicator(count: u64, n: u64, seed: u64) -> Self {
        let p = count as f64 / n as f64;
        McEstimate {
            mean: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_trials: n,
            seed,
        }
    }
}

/// All estimators from one pass over the same trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub outage: McEstimate,
    pub relay_usage: McEstimate,
    /// Bit-error indicator counting.
    pub ber: McEstimate,
    /// Per-trial exact error probability averaged over the same rounds.
    pub ber_semianalytic: McEstimate,
    /// Slots per symbol, `1 + relay usage`.
    pub slots: McEstimate,
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockStats {
    n: u64,
    outage: u64,
    relay: u64,
    errors: u64,
    // Welford accumulators for the semi-analytic error probability
    pe_mean: f64,
    pe_m2: f64,
}

impl BlockStats {
    fn push(&mut self, t: &TrialOutcome) {
        self.n += 1;
        self.outage += t.outage as u64;
        self.relay += t.relay_used as u64;
        self.errors += t.bit_error as u64;
        let d = t.error_probability - self.pe_mean;
        self.pe_mean += d / self.n as f64;
        self.pe_m2 += d * (t.error_probability - self.pe_mean);
    }

    fn merge(self, o: BlockStats) -> BlockStats {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.pe_mean - self.pe_mean;
        let w = o.n as f64 / n as f64;
        BlockStats {
            n,
            outage: self.outage + o.outage,
            relay: self.relay + o.relay,
            errors: self.errors + o.errors,
            pe_mean: self.pe_mean + d * w,
            pe_m2: self.pe_m2 + o.pe_m2 + d * d * self.n as f64 * w,
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_blocks(sys: &SystemDerived, n_trials: u64, seed: u64) -> Result<BlockStats, SimError> {
    if n_trials == 0 {
        return Err(SimError::ZeroTrials);
    }
    let blocks = n_trials.div_ceil(BLOCK_TRIALS);
    let parts: Vec<BlockStats> = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let mut rng = block_rng(seed, k);
            let len = BLOCK_TRIALS.min(n_trials - k * BLOCK_TRIALS);
            let mut s = BlockStats::default();
            for _ in 0..len {
                s.push(&run_trial(&mut rng, sys));
            }
            s
        })
        .collect();
    Ok(parts
        .into_iter()
        .fold(BlockStats::default(), BlockStats::merge))
}

/// Run `n_trials` rounds and report every estimator.
pub fn simulate(sys: &SystemDerived, n_trials: u64, seed: u64) -> Result<McSummary, SimError> {
    let s = run_blocks(sys, n_trials, seed)?;
    let n = s.n;
    let relay = McEstimate::indicator(s.relay, n, seed);
    let pe_var = if n > 1 { s.pe_m2 / (n - 1) as f64 } else { 0.0 };
    Ok(McSummary {
        outage: McEstimate::indicator(s.outage, n, seed),
        relay_usage: relay,
        ber: McEstimate::indicator(s.errors, n, seed),
        ber_semianalytic: McEstimate {
            mean: s.pe_mean,
            std_error: (pe_var / n as f64).sqrt(),
            n_trials: n,
            seed,
        },
        slots: McEstimate {
            mean: 1.0 + relay.mean,
            ..relay
        },
    })
}

pub fn estimate(
    sys: &SystemDerived,
    metric: Metric,
    n_trials: u64,
    seed: u64,
) -> Result<McEstimate, SimError> {
    let s = simulate(sys, n_trials, seed)?;
    Ok(match metric {
        Metric::Outage => s.outage,
        Metric::RelayUsage => s.relay_usage,
        Metric::Ber => s.ber,
        Metric::Slots => s.slots,
    })
}

pub fn estimate_ber_semianalytic(
    sys: &SystemDerived,
    n_trials: u64,
    seed: u64,
) -> Result<McEstimate, SimError> {
    simulate(sys, n_trials, seed).map(|s| s.ber_semianalytic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NoiseModel, PerLink, PowerSplit, SystemConfig, Thresholds};

    fn sys(p_t_db: f64) -> SystemDerived {
        let cfg = SystemConfig {
            p_t_db,
            power_split: PowerSplit::Full,
            d_sd_km: 0.4,
            d_f: 0.5,
            p_l_db_per_km: 60.0,
            r_th: 3.0,
            noise: NoiseModel::with_unit_average_power(0.1, 10.0).unwrap(),
            sigma_h_db: PerLink::uniform(3.0),
        };
        SystemDerived::from_config(&cfg).unwrap()
    }

    #[test]
    fn trial_invariants() {
        let s = sys(35.0);
        let mut rng = block_rng(7, 0);
        for _ in 0..20_000 {
            let t = run_trial(&mut rng, &s);
            assert_eq!(
                t.relay_used,
                t.gamma_sd < s.thresholds.gamma_sd && t.gamma_sr >= s.thresholds.gamma_sr_rd
            );
            assert_eq!(t.slots_used == 2, t.relay_used);
            assert!(!t.outage || t.gamma_sd < s.thresholds.gamma_sd);
            assert!((0.0..=0.5).contains(&t.error_probability));
        }
    }

    #[test]
    fn zero_threshold_never_relays() {
        let s = sys(30.0).with_thresholds(Thresholds {
            gamma_sd: 0.0,
            gamma_sr_rd: 1.0,
        });
        let mut rng = block_rng(1, 0);
        for _ in 0..5_000 {
            let t = run_trial(&mut rng, &s);
            assert!(!t.relay_used && !t.outage);
            assert_eq!(t.slots_used, 1);
        }
    }

    #[test]
    fn closed_sr_gate_never_relays() {
        let s = sys(40.0);
        let s = s.with_thresholds(Thresholds {
            gamma_sr_rd: f64::INFINITY,
            ..s.thresholds
        });
        let mut rng = block_rng(2, 0);
        for _ in 0..5_000 {
            let t = run_trial(&mut rng, &s);
            assert!(!t.relay_used);
            assert_eq!(t.outage, t.gamma_sd < s.thresholds.gamma_sd);
        }
    }

    #[test]
    fn zero_trials_rejected() {
        assert_eq!(
            estimate(&sys(40.0), Metric::Outage, 0, 1),
            Err(SimError::ZeroTrials)
        );
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let s = sys(40.0);
        let a = simulate(&s, 40_000, 11).unwrap();
        let b = simulate(&s, 40_000, 11).unwrap();
        let c = simulate(&s, 40_000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.ber_semianalytic.mean, c.ber_semianalytic.mean);
    }

    #[test]
    fn independent_of_thread_count() {
        let s = sys(40.0);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| simulate(&s, 50_000, 5).unwrap());
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let parallel = pool.install(|| simulate(&s, 50_000, 5).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn welford_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 101.0).collect();
        let mk = |v: &[f64]| {
            let mut s = BlockStats::default();
            for &x in v {
                s.n += 1;
                let d = x - s.pe_mean;
                s.pe_mean += d / s.n as f64;
                s.pe_m2 += d * (x - s.pe_mean);
            }
            s
        };
        let whole = mk(&xs);
        let merged = mk(&xs[..313]).merge(mk(&xs[313..]));
        assert!((whole.pe_mean - merged.pe_mean).abs() < 1e-14);
        assert!((whole.pe_m2 - merged.pe_m2).abs() < 1e-10);
    }

    #[test]
    fn slots_follow_usage() {
        let s = simulate(&sys(45.0), 30_000, 3).unwrap();
        assert_eq!(s.slots.mean, 1.0 + s.relay_usage.mean);
        assert!(s.slots.mean >= 1.0 && s.slots.mean < 2.0);
    }
}
