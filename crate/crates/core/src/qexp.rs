//! Gaussian-mixture approximation of `t ↦ Q(exp(t))`.
//!
//! The composite `Q(e^t)` shows up once the log-normal SNR average of a BPSK
//! error probability is written in the variable `t = ln √(α·γ)`. Replacing it
//! by `Σ_m a_m exp(-((t - b_m)/c_m)²)` turns every such average into a finite
//! sum of Gaussian integrals, which is what the closed forms in
//! [`crate::analytic`] evaluate.
//!
//! This module ships the published seven-term constants ([`shipped_fit`]),
//! the residual metrics on the calibration grid, and a damped Gauss-Newton
//! (Levenberg-Marquardt) refitting engine with seeded random restarts.
//!
//! The shipped constants reproduce the published error figures exactly on
//! `t ∈ [-5, 5]` with 1001 uniform points: SSE 4.7087e-4, and an RMSE of
//! 6.932e-4 when the residual degrees of freedom (1001 − 21) are used as the
//! divisor. [`fit_metrics`] divides by the point count instead, giving
//! 6.859e-4. Over the same region the largest absolute error is 2.64e-3.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::q;

/// Fitting interval used for calibration and refits.
pub const CALIBRATION_REGION: Region = Region { lo: -5.0, hi: 5.0 };
/// Uniform grid size on [`CALIBRATION_REGION`] (step 0.01).
pub const CALIBRATION_POINTS: usize = 1001;

#[allow(clippy::approx_constant)]
const SHIPPED_TERMS: [(f64, f64, f64); 7] = [
    (0.4665, -5.37, 2.174),
    (-0.0007029, -3.674, 0.1178),
    (0.0165, -3.141, 0.0004957),
    (0.2831, -2.998, 1.458),
    (0.2113, -1.764, 1.06),
    (0.1742, -0.8425, 0.837),
    (0.07986, -0.1109, 0.6399),
];

#[derive(Debug, Error)]
pub enum FitError {
    #[error("mixture needs at least one term")]
    NoTerms,
    #[error("term {index}: width c must be finite and non-zero, got {c}")]
    ZeroWidth { index: usize, c: f64 },
    #[error("term {index} has a non-finite coefficient")]
    NonFinite { index: usize },
    #[error("empty fitting region [{lo}, {hi}]")]
    EmptyRegion { lo: f64, hi: f64 },
    #[error("grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("initial fit has {got} terms but {expected} were requested")]
    TermCountMismatch { expected: usize, got: usize },
    #[error("no restart converged within {max_iter} iterations (best rmse {:.3e})", best.rmse)]
    NotConverged {
        best: Box<MixtureFit>,
        max_iter: usize,
    },
}

/// One Gaussian bump `a·exp(-((t - b)/c)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GaussianTerm {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        GaussianTerm { a, b, c }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let z = (t - self.b) / self.c;
        let z2 = z * z;
        // narrow terms (|c| ~ 5e-4) push z² past exp's range well before t
        // leaves the grid
        if z2 > 745.0 || z2.is_nan() {
            0.0
        } else {
            self.a * (-z2).exp()
        }
    }
}

/// Closed interval `[lo, hi]`; serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Region {
    fn from(v: [f64; 2]) -> Self {
        Region { lo: v[0], hi: v[1] }
    }
}

impl From<Region> for [f64; 2] {
    fn from(r: Region) -> Self {
        [r.lo, r.hi]
    }
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FitError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(FitError::EmptyRegion { lo, hi });
        }
        Ok(Region { lo, hi })
    }

    /// `n` uniformly spaced points including both ends.
    pub fn grid(&self, n: usize) -> Result<Vec<f64>, FitError> {
        Region::new(self.lo, self.hi)?;
        if n < 2 {
            return Err(FitError::GridTooSmall(n));
        }
        let step = (self.hi - self.lo) / (n - 1) as f64;
        Ok((0..n).map(|i| self.lo + step * i as f64).collect())
    }
}

/// M-term Gaussian mixture with its fit-quality record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub terms: Vec<GaussianTerm>,
    pub region: Region,
    pub rmse: f64,
    pub sse: f64,
    #[serde(default = "default_points")]
    pub n_grid: usize,
}

fn default_points() -> usize {
    CALIBRATION_POINTS
}

impl MixtureFit {
    /// Validates the terms and records residual metrics against
    /// [`qexp_target`] on `n_grid` points of `region`.
    pub fn new(terms: Vec<GaussianTerm>, region: Region, n_grid: usize) -> Result<Self, FitError> {
        validate_terms(&terms)?;
        let mut fit = MixtureFit {
            terms,
            region,
            rmse: f64::NAN,
            sse: f64::NAN,
            n_grid,
        };
        let m = fit_metrics(&fit, region, n_grid)?;
        fit.rmse = m.rmse;
        fit.sse = m.sse;
        Ok(fit)
    }

    pub fn m(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, t: f64) -> f64 {
        mixture_eval(t, self)
    }
}

fn validate_terms(terms: &[GaussianTerm]) -> Result<(), FitError> {
    if terms.is_empty() {
        return Err(FitError::NoTerms);
    }
    for (index, t) in terms.iter().enumerate() {
        if !(t.a.is_finite() && t.b.is_finite()) {
            return Err(FitError::NonFinite { index });
        }
        if t.c == 0.0 || !t.c.is_finite() {
            return Err(FitError::ZeroWidth { index, c: t.c });
        }
    }
    Ok(())
}

/// `Q(exp(t))`.
pub fn qexp_target(t: f64) -> f64 {
    q(t.exp())
}

/// `Σ_m a_m exp(-((t - b_m)/c_m)²)`.
pub fn mixture_eval(t: f64, fit: &MixtureFit) -> f64 {
    fit.terms.iter().map(|term| term.eval(t)).sum()
}

/// The published M = 7 constants, verbatim.
pub fn shipped_fit() -> MixtureFit {
    let terms = SHIPPED_TERMS
        .iter()
        .map(|&(a, b, c)| GaussianTerm::new(a, b, c))
        .collect();
    MixtureFit::new(terms, CALIBRATION_REGION, CALIBRATION_POINTS)
        .expect("shipped constants are valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMetrics {
    pub rmse: f64,
    pub sse: f64,
    pub max_abs: f64,
}

/// Residuals of the mixture against `Q(exp(t))` on a uniform grid;
/// `rmse = √(sse/n_grid)`.
pub fn fit_metrics(
    fit: &MixtureFit,
    region: Region,
    n_grid: usize,
) -> Result<FitMetrics, FitError> {
    metrics_against(&fit.terms, &qexp_target, region, n_grid)
}

fn metrics_against(
    terms: &[GaussianTerm],
    target: &(dyn Fn(f64) -> f64 + Sync),
    region: Region,
    n_grid: usize,
) -> Result<FitMetrics, FitError> {
    let grid = region.grid(n_grid)?;
    let mut sse = 0.0;
    let mut max_abs: f64 = 0.0;
    for t in grid {
        let r = terms.iter().map(|term| term.eval(t)).sum::<f64>() - target(t);
        sse += r * r;
        max_abs = max_abs.max(r.abs());
    }
    Ok(FitMetrics {
        rmse: (sse / n_grid as f64).sqrt(),
        sse,
        max_abs,
    })
}

/// Starting point for [`refit`].
#[derive(Debug, Clone)]
pub enum Init {
    /// Start from these terms; the result is never worse than they are.
    Terms(Vec<GaussianTerm>),
    /// Evenly spaced centres with linear least-squares amplitudes.
    Heuristic,
}

#[derive(Debug, Clone, Copy)]
pub struct RefitOptions {
    pub n_grid: usize,
    pub max_iter: usize,
    /// Random restarts in addition to the unperturbed start.
    pub restarts: usize,
    /// Relative SSE decrease over [`STALL_WINDOW`] iterations below which a
    /// run counts as converged.
    pub ftol: f64,
    /// Scale of the multiplicative perturbation applied on restarts.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for RefitOptions {
    fn default() -> Self {
        RefitOptions {
            n_grid: CALIBRATION_POINTS,
            max_iter: 1000,
            restarts: 12,
            ftol: 1e-3,
            jitter: 0.15,
            seed: 0x5eed,
        }
    }
}

/// Least-squares refit of an `m`-term mixture to `Q(exp(t))` on `region`.
pub fn refit(
    m: usize,
    region: Region,
    init: Init,
    options: &RefitOptions,
) -> Result<MixtureFit, FitError> {
    let fit = refit_target(&qexp_target, m, region, init, options)?;
    // record metrics against the actual target
    MixtureFit::new(fit.terms, region, options.n_grid)
}

/// Least-squares fit of an `m`-term Gaussian mixture to an arbitrary target.
/// The returned fit's `rmse`/`sse` are measured against `target`.
pub fn refit_target(
    target: &(dyn Fn(f64) -> f64 + Sync),
    m: usize,
    region: Region,
    init: Init,
    options: &RefitOptions,
) -> Result<MixtureFit, FitError> {
    if m == 0 {
        return Err(FitError::NoTerms);
    }
    let grid = region.grid(options.n_grid)?;
    let y: Vec<f64> = grid.iter().map(|&t| target(t)).collect();
    let problem = Problem {
        t: &grid,
        y: &y,
        bounds: Bounds::new(region),
    };

    let start = match init {
        Init::Terms(terms) => {
            if terms.len() != m {
                return Err(FitError::TermCountMismatch {
                    expected: m,
                    got: terms.len(),
                });
            }
            validate_terms(&terms)?;
            terms
        }
        Init::Heuristic => heuristic_init(&problem, m, region),
    };

    let runs: Vec<LmRun> = (0..=options.restarts)
        .into_par_iter()
        .map(|k| {
            let x0 = if k == 0 {
                start.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                rng.set_stream(k as u64);
                perturb(&start, options.jitter, region, &mut rng)
            };
            levenberg_marquardt(&problem, x0, options)
        })
        .collect();

    let best = runs
        .into_iter()
        .reduce(|a, b| if b.sse < a.sse { b } else { a })
        .expect("at least one run");
    let n = options.n_grid as f64;
    // only c² enters the model; report positive widths
    let terms = best
        .terms
        .into_iter()
        .map(|g| GaussianTerm { c: g.c.abs(), ..g })
        .collect();
    let fit = MixtureFit {
        terms,
        region,
        rmse: (best.sse / n).sqrt(),
        sse: best.sse,
        n_grid: options.n_grid,
    };
    if best.converged {
        Ok(fit)
    } else {
        Err(FitError::NotConverged {
            best: Box::new(fit),
            max_iter: options.max_iter,
        })
    }
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    bounds: Bounds,
}

impl Problem<'_> {
    fn residuals(&self, terms: &[GaussianTerm]) -> DVector<f64> {
        DVector::from_iterator(
            self.t.len(),
            self.t
                .iter()
                .zip(self.y)
                .map(|(&t, &y)| terms.iter().map(|g| g.eval(t)).sum::<f64>() - y),
        )
    }

    fn jacobian(&self, terms: &[GaussianTerm]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.t.len(), 3 * terms.len());
        for (i, &t) in self.t.iter().enumerate() {
            for (k, g) in terms.iter().enumerate() {
                let z = (t - g.b) / g.c;
                let z2 = z * z;
                if z2 > 745.0 {
                    continue;
                }
                let e = (-z2).exp();
                j[(i, 3 * k)] = e;
                j[(i, 3 * k + 1)] = g.a * e * 2.0 * z / g.c;
                j[(i, 3 * k + 2)] = g.a * e * 2.0 * z2 / g.c;
            }
        }
        j
    }
}

pub const STALL_WINDOW: usize = 25;

struct LmRun {
    terms: Vec<GaussianTerm>,
    sse: f64,
    converged: bool,
}

fn levenberg_marquardt(problem: &Problem, x0: Vec<GaussianTerm>, opts: &RefitOptions) -> LmRun {
    let np = 3 * x0.len();
    let mut terms = x0;
    let mut r = problem.residuals(&terms);
    let mut sse = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut history = std::collections::VecDeque::with_capacity(STALL_WINDOW + 1);

    for _ in 0..opts.max_iter {
        history.push_back(sse);
        if history.len() > STALL_WINDOW {
            let old = history.pop_front().unwrap_or(sse);
            if old - sse <= opts.ftol * old {
                converged = true;
                break;
            }
        }
        let j = problem.jacobian(&terms);
        let jtj = j.tr_mul(&j);
        let g = j.tr_mul(&r);
        if g.amax() <= 1e-15 * (1.0 + sse) {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for d in 0..np {
                // Marquardt scaling; the floor keeps dead columns solvable
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial = apply_step(&terms, &step, problem.bounds);
            let Some(trial) = trial else {
                lambda *= 4.0;
                continue;
            };
            let rt = problem.residuals(&trial);
            let sse_t = rt.norm_squared();
            if sse_t.is_finite() && sse_t < sse {
                terms = trial;
                r = rt;
                sse = sse_t;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 2.0;
        }
        if !accepted {
            // no descent direction left at any damping: a local minimum
            converged = true;
            break;
        }
    }
    LmRun {
        terms,
        sse,
        converged,
    }
}

/// Centres may sit at most half a region width outside the region and
/// amplitudes stay moderate. Without this a term can park far outside the
/// grid with a huge amplitude: harmless on the grid, ruinous for integrals
/// of the mixture over the whole line.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    b_lo: f64,
    b_hi: f64,
}

const MAX_AMPLITUDE: f64 = 10.0;

impl Bounds {
    fn new(region: Region) -> Self {
        let half = 0.5 * (region.hi - region.lo);
        Bounds {
            b_lo: region.lo - half,
            b_hi: region.hi + half,
        }
    }

    fn admits(&self, g: &GaussianTerm) -> bool {
        g.a.abs() <= MAX_AMPLITUDE && (self.b_lo..=self.b_hi).contains(&g.b)
    }
}

fn apply_step(
    terms: &[GaussianTerm],
    step: &DVector<f64>,
    bounds: Bounds,
) -> Option<Vec<GaussianTerm>> {
    let out: Vec<GaussianTerm> = terms
        .iter()
        .enumerate()
        .map(|(k, g)| GaussianTerm {
            a: g.a + step[3 * k],
            b: g.b + step[3 * k + 1],
            c: g.c + step[3 * k + 2],
        })
        .collect();
    let ok = out
        .iter()
        .all(|g| g.a.is_finite() && g.c.is_finite() && g.c.abs() > 1e-9 && bounds.admits(g));
    ok.then_some(out)
}

fn heuristic_init(problem: &Problem, m: usize, region: Region) -> Vec<GaussianTerm> {
    let width = region.hi - region.lo;
    let spacing = width / m as f64;
    let mut terms: Vec<GaussianTerm> = (0..m)
        .map(|k| {
            GaussianTerm::new(
                1.0,
                region.lo + spacing * (k as f64 + 0.5),
                spacing.max(width / 8.0),
            )
        })
        .collect();
    // amplitudes enter linearly: solve for them with centres and widths fixed
    let mut basis = DMatrix::zeros(problem.t.len(), m);
    for (i, &t) in problem.t.iter().enumerate() {
        for (k, g) in terms.iter().enumerate() {
            basis[(i, k)] = GaussianTerm { a: 1.0, ..*g }.eval(t);
        }
    }
    let y = DVector::from_column_slice(problem.y);
    if let Ok(a) = basis.svd(true, true).solve(&y, 1e-12) {
        for (k, g) in terms.iter_mut().enumerate() {
            if a[k].is_finite() {
                g.a = a[k];
            }
        }
    }
    terms
}

fn perturb(
    terms: &[GaussianTerm],
    scale: f64,
    region: Region,
    rng: &mut ChaCha8Rng,
) -> Vec<GaussianTerm> {
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    let span = region.hi - region.lo;
    terms
        .iter()
        .map(|g| GaussianTerm {
            a: g.a * (1.0 + scale * n()),
            b: g.b + scale * 0.1 * span * n(),
            c: g.c * (scale * n()).exp(),
        })
        .collect()
}
