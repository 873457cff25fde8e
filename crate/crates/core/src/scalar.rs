//! Scalar root finding and the piecewise-linear shrinkage used by the
//! boundary terms.

use crate::error::{Error, Result};

pub(crate) const MAX_ITERATIONS: usize = 200;

/// Root of a nondecreasing function on `[lo, hi]` by Newton steps kept inside
/// a shrinking bracket, falling back to bisection.
///
/// `eval` returns the value and a slope estimate. Requires `eval(lo) ≤ 0 ≤
/// eval(hi)`; for a function with an upward jump the jump location is
/// returned.
pub(crate) fn increasing_root<F>(eval: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    increasing_root_from(eval, lo, hi, 0.5 * (lo + hi), tol)
}

/// [`increasing_root`] with a first guess `start`, clamped to the bracket.
pub(crate) fn increasing_root_from<F>(mut eval: F, mut lo: f64, mut hi: f64, start: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = if start > lo && start < hi { start } else { 0.5 * (lo + hi) };
    for _ in 0..MAX_ITERATIONS {
        let (value, slope) = eval(x);
        if value == 0.0 {
            return Ok(x);
        }
        if value < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= tol * (1.0 + libm::fabs(x)) {
            return Ok(0.5 * (lo + hi));
        }
        let newton = if slope > 0.0 && slope.is_finite() {
            x - value / slope
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if libm::fabs(next - x) <= tol * (1.0 + libm::fabs(x)) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::ProxNotConverged {
        iterations: MAX_ITERATIONS,
    })
}

/// One absolute-value term `weight·|x − center|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Kink {
    pub center: f64,
    pub weight: f64,
}

/// Minimizer of `(alpha/2)(x − b)² + Σ weight_i |x − center_i|`, `alpha > 0`.
///
/// The optimality map `alpha (x − b) + Σ weight_i sign(x − center_i)` is
/// nondecreasing, so the minimizer is either a kink or lies strictly between
/// two consecutive kinks. When a kink is optimal its center is returned
/// bit-exactly.
pub(crate) fn shrink_kinks(alpha: f64, b: f64, kinks: &[Kink]) -> f64 {
    // Tiny insertion sort; at most 2·MAX_DIM kinks per cell.
    let mut sorted = [Kink { center: 0.0, weight: 0.0 }; 2 * crate::MAX_DIM];
    let n = kinks.len().min(sorted.len());
    sorted[..n].copy_from_slice(&kinks[..n]);
    for i in 1..n {
        let mut j = i;
        while j > 0 && sorted[j - 1].center > sorted[j].center {
            sorted.swap(j - 1, j);
            j -= 1;
        }
    }
    let sorted = &sorted[..n];
    let total: f64 = sorted.iter().map(|k| k.weight).sum();

    // Sum of weights of kinks strictly left of x minus those strictly right.
    // Walk the intervals left to right.
    let mut left = 0.0;
    let mut i = 0;
    loop {
        // Interval (prev, next) where `left` weight lies to the left.
        let right = total - left;
        let candidate = b - (left - right) / alpha;
        let lower_ok = i == 0 || candidate > sorted[i - 1].center;
        let upper_ok = i == n || candidate < sorted[i].center;
        if lower_ok && upper_ok {
            return candidate;
        }
        if i == n {
            // Only possible through rounding; the last kink is optimal.
            return sorted[n - 1].center;
        }
        // Check whether the kink at sorted[i] (with ties grouped) is optimal.
        let c = sorted[i].center;
        let mut tied = 0.0;
        let mut j = i;
        while j < n && sorted[j].center == c {
            tied += sorted[j].weight;
            j += 1;
        }
        let below = alpha * (c - b) + left - (total - left);
        let above = below + 2.0 * tied;
        if below <= 0.0 && above >= 0.0 {
            return c;
        }
        left += tied;
        i = j;
    }
}
