//! Gauss-Legendre quadrature: nodes/weights on [-1,1] by Newton iteration
//! on the Legendre recurrence, composite panels, and an adaptive driver
//! that halves panels until the estimate stabilizes.

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates f over [a, b] with one n-point panel.
pub fn panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Integrates f over [a, b] with `panels` log-spaced composite panels
/// (a must be > 0 for log spacing; falls back to linear when a == 0).
pub fn composite_log(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &[(f64, f64)],
) -> f64 {
    debug_assert!(b >= a);
    if a == b {
        return 0.0;
    }
    let mut sum = 0.0;
    if a > 0.0 {
        let (la, lb) = (a.ln(), b.ln());
        for i in 0..panels {
            let lo = la + (lb - la) * i as f64 / panels as f64;
            let hi = la + (lb - la) * (i + 1) as f64 / panels as f64;
            sum += panel(f, lo.exp(), hi.exp(), rule);
        }
    } else {
        for i in 0..panels {
            let lo = a + (b - a) * i as f64 / panels as f64;
            let hi = a + (b - a) * (i + 1) as f64 / panels as f64;
            sum += panel(f, lo, hi, rule);
        }
    }
    sum
}

/// Adaptive composite quadrature: doubles the panel count until two
/// consecutive estimates agree to `tol` relative, starting from 4 panels.
/// Errors if 2^20 panels are insufficient.
pub fn adaptive_log(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    rule: &[(f64, f64)],
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut panels = 4usize;
    let mut prev = composite_log(f, a, b, panels, rule);
    loop {
        panels *= 2;
        let next = composite_log(f, a, b, panels, rule);
        if (next - prev).abs() <= tol * (1.0 + next.abs()) {
            return Ok(next);
        }
        if panels >= 1 << 20 {
            return Err(Error::Accuracy(format!(
                "quadrature on [{a:e}, {b:e}] did not converge with 2^20 panels"
            )));
        }
        prev = next;
    }
}
