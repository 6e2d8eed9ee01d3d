//! Closed-form link metrics for incremental selective decode-and-forward.
//!
//! All evaluators take a [`SystemDerived`], the per-hop SNR distributions and
//! thresholds computed once from a [`SystemConfig`]. Average BER is assembled
//! from *partial* expectations `∫_{y1}^{y2} Pe(y) f_γ(y) dy`, which can be
//! supplied either by the Gaussian-mixture closed form or by adaptive
//! quadrature (see [`PartialEngine`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NoiseMixture, PerLink, SnrParams, SystemConfig, Thresholds};
use crate::qexp::MixtureFit;
use crate::quadrature::{integrate, QuadOptions, QuadratureError};
use crate::special::{phi_pdf, q, q_diff};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("invalid SNR interval: y1 = {y1} must not exceed y2 = {y2} (and y1 >= 0)")]
    InvalidInterval { y1: f64, y2: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// Per-hop SNR laws, thresholds and the noise mixture for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemDerived {
    pub snr: PerLink<SnrParams>,
    pub thresholds: Thresholds,
    pub mixture: NoiseMixture,
}

impl SystemDerived {
    pub fn from_config(cfg: &SystemConfig) -> std::result::Result<Self, ModelError> {
        let links = cfg.links()?;
        Ok(SystemDerived {
            snr: links.map(|l| l.snr),
            thresholds: crate::model::thresholds(cfg.r_th, &cfg.noise)?,
            mixture: cfg.noise.mixture(),
        })
    }

    pub fn with_thresholds(self, thresholds: Thresholds) -> Self {
        SystemDerived { thresholds, ..self }
    }

    /// `Pr[γ_SD < Γ_SD]`.
    pub fn direct_fails(&self) -> f64 {
        self.snr.sd.prob_below(self.thresholds.gamma_sd)
    }

    /// `Pr[γ_SR > Γ_SR]`.
    pub fn relay_decodes(&self) -> f64 {
        self.snr.sr.prob_above(self.thresholds.gamma_sr_rd)
    }
}

/// Probability that neither the direct link nor the relayed path supports
/// the target rate.
pub fn outage_probability(sys: &SystemDerived) -> f64 {
    let g = sys.thresholds.gamma_sr_rd;
    let sd_fail = sys.direct_fails();
    let sr_fail = sys.snr.sr.prob_below(g);
    let sr_pass = sys.snr.sr.prob_above(g);
    let rd_fail = sys.snr.rd.prob_below(g);
    sd_fail * sr_fail + sd_fail * sr_pass * rd_fail
}

/// Fraction of rounds in which the relay transmits: direct link below its
/// threshold and source-relay link above its own.
pub fn relay_usage(sys: &SystemDerived) -> f64 {
    sys.direct_fails() * sys.relay_decodes()
}

/// BPSK error probability at instantaneous SNR `gamma`: `Σ_j p_j Q(√(α_j γ))`.
pub fn instantaneous_ber(gamma: f64, mixture: &NoiseMixture) -> f64 {
    mixture
        .iter()
        .map(|(w, a)| w * q((a * gamma.max(0.0)).sqrt()))
        .sum()
}

/// Unnormalised BER mass over an SNR interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialBer {
    pub value: f64,
    pub y1: f64,
    pub y2: f64,
}

fn check_interval(y1: f64, y2: f64) -> Result<()> {
    if !(y1 >= 0.0) || y2.is_nan() || y1 > y2 {
        return Err(AnalyticError::InvalidInterval { y1, y2 });
    }
    Ok(())
}

/// Partial expectation with `Q(exp(t))` replaced by the mixture `fit`, which
/// reduces every term to a Gaussian integral with Q-function limits.
///
/// `y2 = ∞` drops the upper Q term and `y1 = 0` sets the lower one to one.
/// `y1 == y2` is the empty interval and returns zero.
pub fn partial_ber_closed(
    snr: &SnrParams,
    y1: f64,
    y2: f64,
    fit: &MixtureFit,
    mixture: &NoiseMixture,
) -> Result<PartialBer> {
    check_interval(y1, y2)?;
    let value = if y1 == y2 {
        0.0
    } else if snr.sigma == 0.0 {
        let g = snr.median();
        if y1 < g && g <= y2 {
            mixture
                .iter()
                .map(|(w, a)| w * fit.eval(0.5 * (a * g).ln()))
                .sum()
        } else {
            0.0
        }
    } else {
        let mut total = 0.0;
        for term in &fit.terms {
            for (w, alpha) in mixture.iter() {
                if w == 0.0 {
                    continue;
                }
                total += gaussian_partial(term.a, term.b, term.c, w, alpha, snr, y1, y2);
            }
        }
        total
    };
    Ok(PartialBer { value, y1, y2 })
}

/// One `(m, j)` summand:
/// `2 p a / (σ√2 A) · exp(-(C - B²/A²)) · [Q(√2(A t1 - B/A)) - Q(√2(A t2 - B/A))]`
/// with `t = ln √(α y)`, `A² = 1/c² + 2/σ²`, `B = b/c² + L/σ²`, `L = ln α + μ`.
///
/// `C - B²/A²` is evaluated as `(b - L/2)² / (c² + σ²/2)`, its cancellation-free
/// equivalent; with `c ≈ 5e-4` the textbook form subtracts two numbers of
/// order 1e7.
#[allow(clippy::too_many_arguments)]
fn gaussian_partial(
    a: f64,
    b: f64,
    c: f64,
    w: f64,
    alpha: f64,
    snr: &SnrParams,
    y1: f64,
    y2: f64,
) -> f64 {
    let (mu, s) = (snr.mu, snr.sigma);
    let l = alpha.ln() + mu;
    let c2 = c * c;
    let s2 = s * s;
    let big_a = (1.0 / c2 + 2.0 / s2).sqrt();
    let big_b = b / c2 + l / s2;
    let gap = b - 0.5 * l;
    let exponent = gap * gap / (c2 + 0.5 * s2);
    let pref = 2.0 * w * a / (s * std::f64::consts::SQRT_2 * big_a) * (-exponent).exp();
    if pref == 0.0 {
        return 0.0;
    }
    let limit = |y: f64| {
        let t = 0.5 * (alpha * y).ln();
        std::f64::consts::SQRT_2 * (big_a * t - big_b / big_a)
    };
    let lo = if y1 == 0.0 {
        f64::NEG_INFINITY
    } else {
        limit(y1)
    };
    let hi = if y2.is_infinite() {
        f64::INFINITY
    } else {
        limit(y2)
    };
    pref * q_diff(lo, hi)
}

/// Partial expectation by adaptive quadrature in `u = ln y`, where the
/// log-normal density becomes an ordinary Gaussian.
pub fn partial_ber_quadrature(
    snr: &SnrParams,
    y1: f64,
    y2: f64,
    mixture: &NoiseMixture,
) -> Result<PartialBer> {
    partial_ber_quadrature_with(snr, y1, y2, mixture, &QuadOptions::default())
}

pub fn partial_ber_quadrature_with(
    snr: &SnrParams,
    y1: f64,
    y2: f64,
    mixture: &NoiseMixture,
    opts: &QuadOptions,
) -> Result<PartialBer> {
    check_interval(y1, y2)?;
    if y1 == y2 {
        return Ok(PartialBer { value: 0.0, y1, y2 });
    }
    if snr.sigma == 0.0 {
        let g = snr.median();
        let value = if y1 < g && g <= y2 {
            instantaneous_ber(g, mixture)
        } else {
            0.0
        };
        return Ok(PartialBer { value, y1, y2 });
    }
    // the Gaussian weight is below 1e-340 beyond 40 standard deviations
    const SPAN: f64 = 40.0;
    let lo = if y1 == 0.0 {
        f64::NEG_INFINITY
    } else {
        y1.ln()
    };
    let hi = if y2.is_infinite() {
        f64::INFINITY
    } else {
        y2.ln()
    };
    let lo = lo.max(snr.mu - SPAN * snr.sigma);
    let hi = hi.min(snr.mu + SPAN * snr.sigma);
    if !(lo < hi) {
        return Ok(PartialBer { value: 0.0, y1, y2 });
    }
    let f = |u: f64| {
        instantaneous_ber(u.exp(), mixture) * phi_pdf((u - snr.mu) / snr.sigma) / snr.sigma
    };
    let r = integrate(f, lo, hi, opts)?;
    Ok(PartialBer {
        value: r.value,
        y1,
        y2,
    })
}

/// Which route supplies the partial expectations inside [`average_ber_with`].
#[derive(Debug, Clone, Copy)]
pub enum PartialEngine<'a> {
    ClosedForm(&'a MixtureFit),
    Quadrature,
}

impl PartialEngine<'_> {
    pub fn partial(
        &self,
        snr: &SnrParams,
        y1: f64,
        y2: f64,
        mixture: &NoiseMixture,
    ) -> Result<f64> {
        match self {
            PartialEngine::ClosedForm(fit) => {
                partial_ber_closed(snr, y1, y2, fit, mixture).map(|p| p.value)
            }
            PartialEngine::Quadrature => {
                partial_ber_quadrature(snr, y1, y2, mixture).map(|p| p.value)
            }
        }
    }
}

/// How the relayed-path error term is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BerMode {
    /// Term-by-term transcription of the published closed form: the relayed
    /// block uses the unrestricted hop averages `E_SR`, `E_RD` and scales only
    /// the `E_RD` factors by `Pr[γ_SR > Γ_SR]`. The terms do not partition the
    /// error events, so the value can exceed 0.5 at very low SNR.
    PaperLiteral,
    /// Event decomposition with a normalised conditional SR error
    /// probability, so the three error events partition the sample space.
    /// This is the mode the Monte-Carlo simulator reproduces.
    Coherent,
}

/// Average BER with the mixture closed form for every partial expectation.
pub fn average_ber(sys: &SystemDerived, fit: &MixtureFit, mode: BerMode) -> f64 {
    average_ber_with(sys, PartialEngine::ClosedForm(fit), mode)
        .expect("closed-form partial expectations are infallible on valid thresholds")
}

pub fn average_ber_with(sys: &SystemDerived, engine: PartialEngine, mode: BerMode) -> Result<f64> {
    let mix = &sys.mixture;
    let g_sd = sys.thresholds.gamma_sd;
    let g_r = sys.thresholds.gamma_sr_rd;
    let (sd, sr, rd) = (&sys.snr.sd, &sys.snr.sr, &sys.snr.rd);

    let sd_fail = sd.prob_below(g_sd);
    let sr_fail = sr.prob_below(g_r);
    let sr_pass = sr.prob_above(g_r);

    let direct_ok = engine.partial(sd, g_sd, f64::INFINITY, mix)?;
    let direct_low = engine.partial(sd, 0.0, g_sd, mix)?;
    let rd_all = engine.partial(rd, 0.0, f64::INFINITY, mix)?;

    let relayed = match mode {
        BerMode::Coherent => {
            // sr_pass·q_SR and sr_pass·(1 - q_SR) without dividing by sr_pass
            let sr_err = engine.partial(sr, g_r, f64::INFINITY, mix)?;
            let sr_ok = (sr_pass - sr_err).max(0.0);
            sd_fail * (sr_err * (1.0 - rd_all) + sr_ok * rd_all)
        }
        BerMode::PaperLiteral => {
            let sr_all = engine.partial(sr, 0.0, f64::INFINITY, mix)?;
            sd_fail * ((1.0 - sr_all) * rd_all * sr_pass + sr_all * (1.0 - rd_all * sr_pass))
        }
    };
    Ok(direct_ok + sr_fail * direct_low + relayed)
}
