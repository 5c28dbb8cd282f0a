//! Modulars and Luxemburg norms of mesh functions, plus the sampled
//! norm-modular relation checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshFunction};
use crate::phi::Phi;
use crate::problem::ProblemData;
use crate::report::InequalityReport;

pub const DEFAULT_QUAD_ORDER: usize = 4;
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Value,
    Gradient,
    Sobolev,
}

/// Pairwise tree summation: deterministic and more accurate than a running
/// sum on long cell lists.
pub fn tree_sum(v: &mut Vec<f64>) -> f64 {
    while v.len() > 1 {
        let half = v.len().div_ceil(2);
        for i in 0..v.len() / 2 {
            v[i] = v[2 * i] + v[2 * i + 1];
        }
        if !v.len().is_multiple_of(2) {
            let last = v[v.len() - 1];
            v[half - 1] = last;
        }
        v.truncate(half);
    }
    v.first().copied().unwrap_or(0.0)
}

fn check_same_domain(data: &ProblemData, mesh: &Mesh) -> Result<()> {
    if data.dim() != mesh.dim {
        return Err(Error::MeshMismatch(format!(
            "problem domain is {}D but the mesh is {}D",
            data.dim(),
            mesh.dim
        )));
    }
    Ok(())
}

/// rho_S(u) (or of the gradient): cell-wise Gauss quadrature of
/// S(x, |u|/scale) resp. S(x, |grad u|/scale). The scale argument serves
/// the Luxemburg bisection.
fn modular_scaled(
    data: &ProblemData,
    u: &MeshFunction,
    of_gradient: bool,
    scale: f64,
    quad_order: usize,
) -> Result<f64> {
    check_same_domain(data, &u.mesh)?;
    let phi = Phi::new(data);
    let mesh = &*u.mesh;
    let mut partials = Vec::with_capacity(mesh.cell_count());
    for cell in 0..mesh.cell_count() {
        let mut acc = 0.0;
        if of_gradient {
            let g = u.gradient_on(cell);
            let norm = (g[0] * g[0] + g[1] * g[1]).sqrt() / scale;
            for qp in mesh.cell_quadrature(cell, quad_order) {
                acc += qp.weight * phi.s(qp.point, norm);
            }
        } else {
            for qp in mesh.cell_quadrature(cell, quad_order) {
                let v = u.value_at(cell, qp.bary).abs() / scale;
                acc += qp.weight * phi.s(qp.point, v);
            }
        }
        partials.push(acc);
    }
    Ok(tree_sum(&mut partials))
}

/// rho_S(u) of values or of the gradient field.
pub fn modular_rho_s(data: &ProblemData, u: &MeshFunction, of_gradient: bool) -> Result<f64> {
    modular_scaled(data, u, of_gradient, 1.0, DEFAULT_QUAD_ORDER)
}

/// The first-order modular rho_{1,S}(u) = rho_S(u) + rho_S(grad u).
pub fn modular_rho_1s(data: &ProblemData, u: &MeshFunction) -> Result<f64> {
    Ok(modular_rho_s(data, u, false)? + modular_rho_s(data, u, true)?)
}

/// Luxemburg norm inf{lambda > 0 : rho(u/lambda) <= 1}, located by
/// bisection on the strictly decreasing map lambda -> rho(u/lambda).
/// Returns 0 for the zero function.
pub fn luxemburg_norm(data: &ProblemData, u: &MeshFunction, which: NormKind) -> Result<f64> {
    luxemburg_norm_with_order(data, u, which, DEFAULT_QUAD_ORDER)
}

pub fn luxemburg_norm_with_order(
    data: &ProblemData,
    u: &MeshFunction,
    which: NormKind,
    quad_order: usize,
) -> Result<f64> {
    check_same_domain(data, &u.mesh)?;
    if u.is_zero() {
        return Ok(0.0);
    }
    let rho = |lambda: f64| -> Result<f64> {
        match which {
            NormKind::Value => modular_scaled(data, u, false, lambda, quad_order),
            NormKind::Gradient => modular_scaled(data, u, true, lambda, quad_order),
            NormKind::Sobolev => Ok(modular_scaled(data, u, false, lambda, quad_order)?
                + modular_scaled(data, u, true, lambda, quad_order)?),
        }
    };
    // Gradient norm of a constant is 0; fall back to 0 rather than chase
    // an unbounded bracket.
    let mut lo = 1e-12;
    let mut hi = 1.0;
    if rho(hi)? > 1.0 {
        while rho(hi)? > 1.0 {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::Accuracy("Luxemburg bracket exceeded 1e12".into()));
            }
        }
        lo = hi / 2.0;
    } else {
        while rho(lo)? <= 1.0 {
            if rho(lo)? == 0.0 {
                return Ok(0.0);
            }
            lo /= 2.0;
            if lo < 1e-300 {
                return Ok(0.0);
            }
        }
    }
    let mut mid;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = rho(mid)?;
        if (v - 1.0).abs() <= NORM_TOL {
            return Ok(mid);
        }
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid {
            return Ok(mid);
        }
    }
    Err(Error::Accuracy(format!(
        "Luxemburg bisection did not meet |rho - 1| <= {NORM_TOL} in 200 steps"
    )))
}

/// Seeded random mesh function: standard normal nodal values, one
/// neighbour-averaging smoothing pass, boundary zeroed.
pub fn seeded_function(mesh: &std::sync::Arc<Mesh>, seed: u64) -> MeshFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = Vec::with_capacity(mesh.vertex_count());
    while values.len() < mesh.vertex_count() {
        // Box-Muller.
        let u1: f64 = rng.gen::<f64>().max(1e-16);
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        values.push(r * (std::f64::consts::TAU * u2).cos());
        if values.len() < mesh.vertex_count() {
            values.push(r * (std::f64::consts::TAU * u2).sin());
        }
    }
    let adj = mesh.neighbours();
    let smoothed: Vec<f64> = (0..values.len())
        .map(|i| {
            let nb = &adj[i];
            let avg = nb.iter().map(|&j| values[j]).sum::<f64>() / nb.len().max(1) as f64;
            0.5 * values[i] + 0.5 * avg
        })
        .collect();
    let mut f = MeshFunction { mesh: mesh.clone(), values: smoothed };
    f.zero_boundary();
    f
}

/// Norm-modular relations on seeded samples: with
/// lo = min{p^-, (q+floor(s))^-} and hi = max{p^+, (q+ceil(s))^+},
/// ||u|| < 1 implies ||u||^hi <= rho(u) <= ||u||^lo and the powers swap
/// for ||u|| > 1; at ||u|| = 1 the modular is 1. Checked for the plain
/// and the first-order modular/norm pair.
pub fn check_norm_modular_relations(
    data: &ProblemData,
    mesh: &std::sync::Arc<Mesh>,
    sample_count: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let summary = crate::problem::exponent_summary(data, 0.0)?;
    let (lo_exp, hi_exp) = (summary.ell_minus, summary.ell_plus);
    let mut report = InequalityReport::new("norm-modular-relations", sample_count);
    let targets: Vec<f64> = (1..=9)
        .map(|i| i as f64 / 10.0)
        .chain(std::iter::once(1.0))
        .chain((1..=9).map(|i| 1.0 + i as f64))
        .collect();
    for i in 0..sample_count {
        let base = seeded_function(mesh, seed.wrapping_add(i as u64));
        if base.is_zero() {
            continue;
        }
        let target = targets[i % targets.len()];
        for (which, tag) in [(NormKind::Value, 0.0), (NormKind::Sobolev, 1.0)] {
            let norm0 = luxemburg_norm(data, &base, which)?;
            if norm0 == 0.0 {
                continue;
            }
            let u = base.scaled(target / norm0);
            let norm = luxemburg_norm(data, &u, which)?;
            let rho = match which {
                NormKind::Value => modular_rho_s(data, &u, false)?,
                _ => modular_rho_1s(data, &u)?,
            };
            let margin = if (norm - 1.0).abs() <= 1e-9 {
                1e-9 - (rho - 1.0).abs()
            } else if norm < 1.0 {
                (rho - norm.powf(hi_exp)).min(norm.powf(lo_exp) - rho)
            } else {
                (rho - norm.powf(lo_exp)).min(norm.powf(hi_exp) - rho)
            };
            report.observe(margin, &[i as f64, tag, target, norm, rho]);
            // Unit-ball agreement: rho and the norm sit on the same side
            // of 1 (within tolerance near the sphere).
            if (norm - 1.0).abs() > 1e-8 && (rho - 1.0).abs() > 1e-8 {
                let agree = (norm < 1.0) == (rho < 1.0);
                report.observe(if agree { margin } else { -1.0 }, &[i as f64, tag, target]);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use crate::problem::DomainKind;

    fn data(p: f64, q: f64, s: f64, a: f64, b: f64) -> ProblemData {
        ProblemData::new(
            ScalarField::constant(p),
            ScalarField::constant(q),
            ScalarField::constant(s),
            ScalarField::constant(a),
            ScalarField::constant(b),
            3,
            DomainKind::Interval,
            None,
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn modular_of_constant_one() {
        // u = 1 on [0,1] with a=1, b=0, p=2: integral of 1 = 1.
        let d = data(2.0, 2.2, 0.5, 1.0, 0.0);
        let m = Mesh::unit_interval(16);
        let u = MeshFunction::from_fn(&m, |_| 1.0);
        assert!((modular_rho_s(&d, &u, false).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn modular_of_linear_ramp() {
        // u(x) = x, p=2, b=0: integral x^2 dx = 1/3; gradient modular 1.
        let d = data(2.0, 2.2, 0.5, 1.0, 0.0);
        let m = Mesh::unit_interval(16);
        let u = MeshFunction::from_fn(&m, |p| p[0]);
        assert!((modular_rho_s(&d, &u, false).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((modular_rho_s(&d, &u, true).unwrap() - 1.0).abs() < 1e-12);
        assert!((modular_rho_1s(&d, &u).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn modular_zero_iff_zero() {
        let d = data(2.0, 2.2, 0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(8);
        assert_eq!(modular_rho_1s(&d, &MeshFunction::zeros(&m)).unwrap(), 0.0);
    }

    #[test]
    fn modular_refinement_is_stable() {
        // Keep u away from 0: fractional powers of |u| are smooth only
        // where u does not vanish.
        let d = data(2.0, 2.2, -0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(32);
        let u = MeshFunction::from_fn(&m, |p| 0.2 + 0.5 * (std::f64::consts::PI * p[0]).sin());
        let coarse = modular_scaled(&d, &u, false, 1.0, 4).unwrap();
        let fine = modular_scaled(&d, &u, false, 1.0, 16).unwrap();
        assert!(
            (coarse - fine).abs() / fine < 1e-9,
            "coarse={coarse} fine={fine}"
        );
    }

    #[test]
    fn luxemburg_norm_of_constant() {
        // |Omega| = 1, a=1, b=0, p=2: rho(c/lambda) = c^2/lambda^2, so the
        // norm is |c|.
        let d = data(2.0, 2.2, 0.5, 1.0, 0.0);
        let m = Mesh::unit_interval(16);
        let u = MeshFunction::from_fn(&m, |_| -2.5);
        let norm = luxemburg_norm(&d, &u, NormKind::Value).unwrap();
        assert!((norm - 2.5).abs() < 1e-9);
        assert_eq!(
            luxemburg_norm(&d, &MeshFunction::zeros(&m), NormKind::Value).unwrap(),
            0.0
        );
    }

    #[test]
    fn luxemburg_norm_self_certifies() {
        let d = data(2.0, 2.2, -0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(32);
        let u = seeded_function(&m, 42);
        let norm = luxemburg_norm(&d, &u, NormKind::Sobolev).unwrap();
        let rho = modular_rho_s(&d, &u.scaled(1.0 / norm), false).unwrap()
            + modular_rho_s(&d, &u.scaled(1.0 / norm), true).unwrap();
        assert!((rho - 1.0).abs() <= 1e-9, "rho={rho}");
    }

    #[test]
    fn homogeneity_of_the_norm() {
        let d = data(2.0, 2.2, 0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(24);
        let u = seeded_function(&m, 7);
        let n1 = luxemburg_norm(&d, &u, NormKind::Value).unwrap();
        for c in [0.12, 3.4, 17.0] {
            let nc = luxemburg_norm(&d, &u.scaled(c), NormKind::Value).unwrap();
            assert!((nc - c * n1).abs() / (c * n1) < 1e-9, "c={c}");
        }
    }

    #[test]
    fn triangle_inequality_on_samples() {
        let d = data(2.0, 2.2, -0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(24);
        for seed in 0..20u64 {
            let u = seeded_function(&m, seed);
            let v = seeded_function(&m, seed + 1000);
            let mut w = u.clone();
            for (wi, vi) in w.values.iter_mut().zip(&v.values) {
                *wi += vi;
            }
            let (nu, nv, nw) = (
                luxemburg_norm(&d, &u, NormKind::Value).unwrap(),
                luxemburg_norm(&d, &v, NormKind::Value).unwrap(),
                luxemburg_norm(&d, &w, NormKind::Value).unwrap(),
            );
            assert!(nw <= nu + nv + 1e-9, "{nw} > {nu} + {nv}");
        }
    }

    #[test]
    fn constant_exponent_modular_is_norm_power() {
        // p = q, s = 0, b = 0: rho(u) = ||u||^p exactly.
        let d = data(2.0, 2.0, 0.0, 1.0, 0.0);
        let m = Mesh::unit_interval(16);
        let u = seeded_function(&m, 3).scaled(2.0);
        let norm = luxemburg_norm(&d, &u, NormKind::Value).unwrap();
        let rho = modular_rho_s(&d, &u, false).unwrap();
        assert!((rho - norm.powi(2)).abs() / rho < 1e-8);
    }

    #[test]
    fn modular_on_the_unit_square() {
        let d = ProblemData::new(
            ScalarField::constant(2.0),
            ScalarField::constant(2.2),
            ScalarField::constant(0.5),
            ScalarField::constant(1.0),
            ScalarField::constant(0.0),
            4,
            DomainKind::UnitSquare,
            None,
            None,
            None,
        )
        .unwrap();
        let m = Mesh::unit_square(8);
        // u = 1 on the unit square: rho = 1. u = x: rho = 1/3.
        let one = MeshFunction::from_fn(&m, |_| 1.0);
        assert!((modular_rho_s(&d, &one, false).unwrap() - 1.0).abs() < 1e-12);
        let ramp = MeshFunction::from_fn(&m, |p| p[0]);
        assert!((modular_rho_s(&d, &ramp, false).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((modular_rho_s(&d, &ramp, true).unwrap() - 1.0).abs() < 1e-12);
        let norm = luxemburg_norm(&d, &one, NormKind::Value).unwrap();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norm_modular_relations_no_violations() {
        let d = data(2.0, 2.2, -0.5, 1.0, 1.0);
        let m = Mesh::unit_interval(16);
        let rep = check_norm_modular_relations(&d, &m, 40, 11).unwrap();
        assert!(rep.passes(1e-9), "worst margin {}", rep.worst_margin);
    }
}
