//! Assembly of the multi-phase energy
//! E(u) = int M(x,|grad u|) - Lambda int M*(x,u) - lambda int M_star(x,u)
//! over P1 mesh functions, its nodal gradient (the pairing with every free
//! basis function), and a damped descent solver for the sublinear regime.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, MeshFunction};
use crate::modular::{self, tree_sum, NormKind};
use crate::phi::Phi;
use crate::problem::ProblemData;
use crate::report::InequalityReport;

#[derive(Debug, Clone)]
pub struct EnergyAssembly<'a> {
    pub data: &'a ProblemData,
    pub mesh: Arc<Mesh>,
    /// Weight of the critical reaction term.
    pub lambda_crit: f64,
    /// Weight of the subcritical reaction term.
    pub lambda_sub: f64,
    pub quad_order: usize,
}

impl<'a> EnergyAssembly<'a> {
    pub fn new(data: &'a ProblemData, mesh: &Arc<Mesh>, lambda_crit: f64, lambda_sub: f64) -> Result<Self> {
        if data.dim() != mesh.dim {
            return Err(Error::MeshMismatch(format!(
                "problem domain is {}D but the mesh is {}D",
                data.dim(),
                mesh.dim
            )));
        }
        if lambda_crit < 0.0 || lambda_sub < 0.0 {
            return Err(Error::Precondition("reaction weights must be >= 0".into()));
        }
        if lambda_sub > 0.0 {
            data.subcritical()?;
        }
        Ok(EnergyAssembly {
            data,
            mesh: mesh.clone(),
            lambda_crit,
            lambda_sub,
            quad_order: modular::DEFAULT_QUAD_ORDER,
        })
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.quad_order = order;
        self
    }

    /// E(u) by cell quadrature. E(0) = 0 and E(-u) = E(u): the integrands
    /// see |u| and |grad u| only.
    pub fn energy(&self, u: &MeshFunction) -> Result<f64> {
        let phi = Phi::new(self.data);
        let mesh = &*self.mesh;
        let mut parts = Vec::with_capacity(mesh.cell_count());
        for cell in 0..mesh.cell_count() {
            let g = u.gradient_on(cell);
            let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
            let mut acc = 0.0;
            for qp in mesh.cell_quadrature(cell, self.quad_order) {
                let mut density = phi.flux_density(qp.point, gn);
                if self.lambda_crit != 0.0 || self.lambda_sub != 0.0 {
                    let v = u.value_at(cell, qp.bary);
                    if self.lambda_crit != 0.0 {
                        density -= self.lambda_crit * phi.critical_density(qp.point, v);
                    }
                    if self.lambda_sub != 0.0 {
                        density -= self.lambda_sub * phi.subcritical_density(qp.point, v)?;
                    }
                }
                acc += qp.weight * density;
            }
            parts.push(acc);
        }
        Ok(tree_sum(&mut parts))
    }

    /// Nodal gradient: component i is the pairing of the operator with the
    /// nodal basis function of vertex i. Boundary components are zeroed
    /// (Dirichlet constraint).
    pub fn gradient(&self, u: &MeshFunction) -> Result<Vec<f64>> {
        let phi = Phi::new(self.data);
        let mesh = &*self.mesh;
        let mut out = vec![0.0; mesh.vertex_count()];
        let mut flux = [0.0; 2];
        for cell in 0..mesh.cell_count() {
            let ids = mesh.cell_vertex_ids(cell);
            let local = MeshFunction::basis_gradients(mesh, cell);
            let g = u.gradient_on(cell);
            let nloc = if mesh.dim == 1 { 2 } else { 3 };
            for qp in mesh.cell_quadrature(cell, self.quad_order) {
                phi.flux(qp.point, &g, &mut flux);
                let v = u.value_at(cell, qp.bary);
                let mut reaction = 0.0;
                if self.lambda_crit != 0.0 {
                    reaction += self.lambda_crit * phi.reaction_critical(qp.point, v);
                }
                if self.lambda_sub != 0.0 {
                    reaction += self.lambda_sub * phi.reaction_sub(qp.point, v)?;
                }
                for k in 0..nloc {
                    let dot = flux[0] * local[k][0] + flux[1] * local[k][1];
                    out[ids[k]] += qp.weight * (dot - reaction * qp.bary[k]);
                }
            }
        }
        for (gi, &on_boundary) in out.iter_mut().zip(&mesh.boundary) {
            if on_boundary {
                *gi = 0.0;
            }
        }
        Ok(out)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// <J1(u) - J1(v), u - v> >= 0 on seeded admissible pairs (the flux part
/// alone, no reactions).
pub fn check_monotone_j1(
    data: &ProblemData,
    mesh: &Arc<Mesh>,
    pairs: usize,
    seed: u64,
) -> Result<InequalityReport> {
    let assembly = EnergyAssembly::new(data, mesh, 0.0, 0.0)?;
    let mut report = InequalityReport::new("monotone-flux-pairing", pairs);
    for i in 0..pairs {
        let u = modular::seeded_function(mesh, seed.wrapping_add(2 * i as u64));
        let v = if i.is_multiple_of(16) {
            u.clone()
        } else {
            modular::seeded_function(mesh, seed.wrapping_add(2 * i as u64 + 1))
        };
        let gu = assembly.gradient(&u)?;
        let gv = assembly.gradient(&v)?;
        let mut pairing = 0.0;
        let mut dist2 = 0.0;
        for k in 0..gu.len() {
            let d = u.values[k] - v.values[k];
            pairing += (gu[k] - gv[k]) * d;
            dist2 += d * d;
        }
        let slack = pairing + 1e-12 * (1.0 + dist2);
        report.observe(slack / (1.0 + dist2), &[i as f64, pairing, dist2]);
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: MeshFunction,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// (energy, residual) pairs along the iteration.
    #[serde(skip)]
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Admissible upper bound for the subcritical weight.
    pub lambda_cap: f64,
    pub quad_order: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iters: 200_000,
            lambda_cap: 0.2,
            quad_order: modular::DEFAULT_QUAD_ORDER,
        }
    }
}

#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// Start exactly at zero.
    Zero,
    /// A seeded smooth bump scaled to unit Sobolev Luxemburg norm.
    Seeded(u64),
    /// Warm start from a previous solution.
    Warm(MeshFunction),
}

fn seeded_bump(data: &ProblemData, mesh: &Arc<Mesh>, seed: u64) -> Result<MeshFunction> {
    let mut u = MeshFunction::from_fn(mesh, |p| {
        let sx = (std::f64::consts::PI * p[0]).sin();
        if mesh.dim == 1 {
            sx
        } else {
            sx * (std::f64::consts::PI * p[1]).sin()
        }
    });
    let noise = modular::seeded_function(mesh, seed);
    for (v, n) in u.values.iter_mut().zip(&noise.values) {
        *v += 0.05 * n;
    }
    u.zero_boundary();
    let norm = modular::luxemburg_norm(data, &u, NormKind::Sobolev)?;
    Ok(u.scaled(1.0 / norm))
}

/// Damped gradient descent with Armijo backtracking (c = 1e-4, halving)
/// on the energy. Accepts when the free-node l2 residual of the assembled
/// gradient drops below `tol`; non-convergence is flagged, not an error.
pub fn solve_sublinear(
    data: &ProblemData,
    mesh: &Arc<Mesh>,
    lambda_sub: f64,
    lambda_crit: f64,
    init: InitialGuess,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if lambda_sub < 0.0 || lambda_sub > opts.lambda_cap {
        return Err(Error::Precondition(format!(
            "lambda = {lambda_sub} outside the admissible range (0, {}]",
            opts.lambda_cap
        )));
    }
    if lambda_sub > 0.0 {
        data.subcritical()?;
        let report = crate::problem::validate_hypotheses(data, 128)?;
        for name in ["sublinear-regime", "sandwich-sublinear"] {
            let entry = report
                .entry(name)
                .ok_or_else(|| Error::Precondition(format!("{name} not evaluated")))?;
            if !entry.pass {
                return Err(Error::Precondition(format!(
                    "{name} fails (margin {:.3e}); the sublinear solver does not apply",
                    entry.margin
                )));
            }
        }
    }
    let assembly =
        EnergyAssembly::new(data, mesh, lambda_crit, lambda_sub)?.with_quad_order(opts.quad_order);
    let mut u = match init {
        InitialGuess::Zero => MeshFunction::zeros(mesh),
        InitialGuess::Seeded(seed) => seeded_bump(data, mesh, seed)?,
        InitialGuess::Warm(w) => {
            if !w.is_dirichlet_admissible() {
                return Err(Error::Precondition("warm start must vanish on the boundary".into()));
            }
            w
        }
    };
    let mut energy = assembly.energy(&u)?;
    let mut grad = assembly.gradient(&u)?;
    let mut alpha = 1.0f64;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..opts.max_iters {
        iterations = iter;
        let residual = l2(&grad);
        trace.push((energy, residual));
        if residual <= opts.tol {
            converged = true;
            break;
        }
        let g2 = residual * residual;
        // Armijo backtracking along -grad.
        let mut accepted = false;
        while alpha > 1e-18 {
            let mut trial = u.clone();
            for (tv, g) in trial.values.iter_mut().zip(&grad) {
                *tv -= alpha * g;
            }
            let e_trial = assembly.energy(&trial)?;
            if e_trial <= energy - 1e-4 * alpha * g2 {
                u = trial;
                energy = e_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        grad = assembly.gradient(&u)?;
        alpha = (alpha * 2.0).min(1e6);
    }
    let residual = l2(&grad);
    Ok(SolveReport {
        solution: u,
        energy,
        residual,
        iterations,
        converged: converged || residual <= opts.tol,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub norm_1s: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves along a decreasing lambda list, warm-starting each solve from
/// the previous solution, and reports the Sobolev Luxemburg norm of each
/// solution.
pub fn lambda_sweep(
    data: &ProblemData,
    mesh: &Arc<Mesh>,
    lambdas: &[f64],
    lambda_crit: f64,
    seed: u64,
    opts: &SolveOptions,
) -> Result<(Vec<SweepRow>, Vec<MeshFunction>)> {
    if lambdas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Precondition("lambda list must be non-increasing".into()));
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    let mut solutions = Vec::with_capacity(lambdas.len());
    let mut warm: Option<MeshFunction> = None;
    for &lambda in lambdas {
        let init = match &warm {
            Some(w) => InitialGuess::Warm(w.clone()),
            None => InitialGuess::Seeded(seed),
        };
        let report = solve_sublinear(data, mesh, lambda, lambda_crit, init, opts)?;
        let norm = modular::luxemburg_norm(data, &report.solution, NormKind::Sobolev)?;
        rows.push(SweepRow {
            lambda,
            norm_1s: norm,
            energy: report.energy,
            residual: report.residual,
            iterations: report.iterations,
            converged: report.converged,
        });
        warm = Some(report.solution.clone());
        solutions.push(report.solution);
    }
    Ok((rows, solutions))
}
