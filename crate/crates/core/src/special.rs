//! Gaussian tail helpers built on the complementary error function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Gaussian Q-function, `Q(x) = Pr[N(0,1) > x]`.
///
/// Evaluated as `erfc(x/√2)/2`, which keeps full relative precision deep
/// into the upper tail (until the result underflows) and saturates cleanly
/// at `±∞`.
#[inline]
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF, `Φ(x) = Q(-x)`.
#[inline]
pub fn phi_cdf(x: f64) -> f64 {
    q(-x)
}

/// Standard normal density.
#[inline]
pub fn phi_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Q(lo) - Q(hi)` for `lo <= hi`, i.e. `Pr[lo < N(0,1) <= hi]`.
///
/// Both tails are handled through the side closest to zero so that
/// differences of two values near one do not cancel.
pub fn q_diff(lo: f64, hi: f64) -> f64 {
    debug_assert!(!(lo > hi), "q_diff expects lo <= hi");
    if lo >= hi {
        return 0.0;
    }
    if lo >= 0.0 {
        q(lo) - q(hi)
    } else if hi <= 0.0 {
        q(-hi) - q(-lo)
    } else {
        1.0 - q(-lo) - q(hi)
    }
}
