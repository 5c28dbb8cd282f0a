//! Bracketed bisection on monotone functions and a golden-section fallback
//! for one-dimensional maximization.

use crate::error::{Error, Result};

/// Mixed absolute/relative tolerance used by the solvers below.
pub const ABS_TOL: f64 = 1e-12;
pub const REL_TOL: f64 = 1e-10;
pub const MAX_BISECT: usize = 200;

/// Cap for geometric bracket growth.
pub const BRACKET_CAP: f64 = 1e30;

/// Solves f(t) = y for an increasing f on [0, inf) by growing the bracket
/// geometrically from [0, 1] and bisecting. Returns t with
/// |f(t) - y| <= ABS_TOL + REL_TOL * (1 + |y|).
pub fn invert_increasing(mut f: impl FnMut(f64) -> f64, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(Error::Domain(format!("target {y} must be >= 0")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while f(hi) < y {
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(Error::Overflow(format!(
                "bracket for inverse exceeded {BRACKET_CAP:e} at target {y:e}"
            )));
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    // Relative in the target, with the interval-collapse stop below as the
    // absolute backstop.
    let tol = ABS_TOL * y.min(1.0) + REL_TOL * y;
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - y).abs() <= tol || (hi - lo) <= f64::EPSILON * mid.max(1.0) {
            return Ok(mid);
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds the root of an increasing function g with g(lo) <= 0 <= g(hi)
/// by plain bisection on a known bracket.
pub fn bisect_increasing(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= f64::EPSILON * mid.max(1.0) {
            return mid;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes a unimodal function on [lo, hi] by golden-section search.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..MAX_BISECT {
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
