//! Conforming simplicial meshes of the unit interval and unit square, and
//! piecewise-linear functions on them. Gradients are constant per cell;
//! Dirichlet admissibility means zero values on the boundary mask.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::quadrature;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Point>,
    /// 1D cells (empty in 2D).
    pub segments: Vec<[usize; 2]>,
    /// 2D cells (empty in 1D).
    pub triangles: Vec<[usize; 3]>,
    /// True exactly on boundary vertices.
    pub boundary: Vec<bool>,
}

impl Mesh {
    /// Uniform mesh of [0,1] with n cells.
    pub fn unit_interval(n: usize) -> Arc<Mesh> {
        assert!(n >= 2);
        let vertices: Vec<Point> = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
        let segments = (0..n).map(|i| [i, i + 1]).collect();
        let mut boundary = vec![false; n + 1];
        boundary[0] = true;
        boundary[n] = true;
        Arc::new(Mesh { dim: 1, vertices, segments, triangles: Vec::new(), boundary })
    }

    /// Structured triangulation of [0,1]^2: n x n squares, each split into
    /// two triangles along the same diagonal.
    pub fn unit_square(n: usize) -> Arc<Mesh> {
        assert!(n >= 2);
        let verts_per_row = n + 1;
        let mut vertices = Vec::with_capacity(verts_per_row * verts_per_row);
        let mut boundary = Vec::with_capacity(verts_per_row * verts_per_row);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let idx = |i: usize, j: usize| j * verts_per_row + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        Arc::new(Mesh { dim: 2, vertices, segments: Vec::new(), triangles, boundary })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        if self.dim == 1 {
            self.segments.len()
        } else {
            self.triangles.len()
        }
    }

    pub fn cell_measure(&self, cell: usize) -> f64 {
        if self.dim == 1 {
            let [a, b] = self.segments[cell];
            self.vertices[b][0] - self.vertices[a][0]
        } else {
            let [a, b, c] = self.triangles[cell];
            let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            0.5 * ((vb[0] - va[0]) * (vc[1] - va[1]) - (vc[0] - va[0]) * (vb[1] - va[1])).abs()
        }
    }

    pub fn free_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&i| !self.boundary[i])
    }

    /// Quadrature points with weights over one cell, plus the barycentric
    /// coordinates of each point. `order` is the Gauss point count per
    /// axis; order 4 integrates degree-7 polynomials exactly in 1D and the
    /// default order 5 does the same for the collapsed 2D rule.
    pub fn cell_quadrature(&self, cell: usize, order: usize) -> Vec<QuadPoint> {
        let rule = quadrature::gauss_legendre(order);
        if self.dim == 1 {
            let [a, b] = self.segments[cell];
            let (xa, xb) = (self.vertices[a][0], self.vertices[b][0]);
            let mid = 0.5 * (xa + xb);
            let half = 0.5 * (xb - xa);
            rule.iter()
                .map(|&(t, w)| {
                    let x = mid + half * t;
                    let lb = (x - xa) / (xb - xa);
                    QuadPoint { point: [x, 0.0], weight: w * half, bary: [1.0 - lb, lb, 0.0] }
                })
                .collect()
        } else {
            // Collapsed tensor rule on the reference triangle via
            // (r, s) = (u, (1-u)v) with Jacobian (1-u).
            let [a, b, c] = self.triangles[cell];
            let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            let area = self.cell_measure(cell);
            let mut out = Vec::with_capacity(rule.len() * rule.len());
            for &(tu, wu) in &rule {
                let u = 0.5 * (tu + 1.0);
                for &(tv, wv) in &rule {
                    let v = 0.5 * (tv + 1.0);
                    let r = u;
                    let s = (1.0 - u) * v;
                    let w = wu * wv * 0.25 * (1.0 - u) * 2.0 * area;
                    let point = [
                        va[0] + r * (vb[0] - va[0]) + s * (vc[0] - va[0]),
                        va[1] + r * (vb[1] - va[1]) + s * (vc[1] - va[1]),
                    ];
                    out.push(QuadPoint { point, weight: w, bary: [1.0 - r - s, r, s] });
                }
            }
            out
        }
    }

    pub fn cell_vertex_ids(&self, cell: usize) -> [usize; 3] {
        if self.dim == 1 {
            let [a, b] = self.segments[cell];
            [a, b, usize::MAX]
        } else {
            self.triangles[cell]
        }
    }

    /// Vertex neighbour lists (for the smoothing pass on random samples).
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        let push = |a: usize, b: usize, adj: &mut Vec<Vec<usize>>| {
            if !adj[a].contains(&b) {
                adj[a].push(b);
            }
        };
        for seg in &self.segments {
            push(seg[0], seg[1], &mut adj);
            push(seg[1], seg[0], &mut adj);
        }
        for tri in &self.triangles {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        push(tri[i], tri[j], &mut adj);
                    }
                }
            }
        }
        adj
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub point: Point,
    pub weight: f64,
    /// Barycentric coordinates w.r.t. the cell vertices (third unused in 1D).
    pub bary: [f64; 3],
}

/// Nodal values of a piecewise-linear function.
#[derive(Debug, Clone)]
pub struct MeshFunction {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl MeshFunction {
    pub fn zeros(mesh: &Arc<Mesh>) -> Self {
        MeshFunction { mesh: mesh.clone(), values: vec![0.0; mesh.vertex_count()] }
    }

    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn(Point) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|&v| f(v)).collect();
        MeshFunction { mesh: mesh.clone(), values }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_dirichlet_admissible(&self) -> bool {
        self.mesh
            .boundary
            .iter()
            .zip(&self.values)
            .all(|(&on_boundary, &v)| !on_boundary || v == 0.0)
    }

    pub fn zero_boundary(&mut self) {
        for (v, &on_boundary) in self.values.iter_mut().zip(&self.mesh.boundary) {
            if on_boundary {
                *v = 0.0;
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        MeshFunction {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn value_at(&self, cell: usize, bary: [f64; 3]) -> f64 {
        let ids = self.mesh.cell_vertex_ids(cell);
        if self.mesh.dim == 1 {
            bary[0] * self.values[ids[0]] + bary[1] * self.values[ids[1]]
        } else {
            bary[0] * self.values[ids[0]]
                + bary[1] * self.values[ids[1]]
                + bary[2] * self.values[ids[2]]
        }
    }

    /// Constant gradient on a cell; second component 0 in 1D.
    pub fn gradient_on(&self, cell: usize) -> [f64; 2] {
        let m = &*self.mesh;
        if m.dim == 1 {
            let [a, b] = m.segments[cell];
            let h = m.vertices[b][0] - m.vertices[a][0];
            [(self.values[b] - self.values[a]) / h, 0.0]
        } else {
            let [a, b, c] = m.triangles[cell];
            let (va, vb, vc) = (m.vertices[a], m.vertices[b], m.vertices[c]);
            let (e1, e2) = ([vb[0] - va[0], vb[1] - va[1]], [vc[0] - va[0], vc[1] - va[1]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            let (d1, d2) = (self.values[b] - self.values[a], self.values[c] - self.values[a]);
            [(d1 * e2[1] - d2 * e1[1]) / det, (-d1 * e2[0] + d2 * e1[0]) / det]
        }
    }

    /// Gradients of the local P1 basis functions on a cell.
    pub fn basis_gradients(mesh: &Mesh, cell: usize) -> [[f64; 2]; 3] {
        if mesh.dim == 1 {
            let [a, b] = mesh.segments[cell];
            let h = mesh.vertices[b][0] - mesh.vertices[a][0];
            [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
        } else {
            let [a, b, c] = mesh.triangles[cell];
            let (va, vb, vc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            let (e1, e2) = ([vb[0] - va[0], vb[1] - va[1]], [vc[0] - va[0], vc[1] - va[1]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            let gb = [e2[1] / det, -e2[0] / det];
            let gc = [-e1[1] / det, e1[0] / det];
            [[-gb[0] - gc[0], -gb[1] - gc[1]], gb, gc]
        }
    }

    /// CSV rows `vertex_id,x[,y],value`; lines starting with `#` are
    /// comments.
    pub fn write_csv(&self, w: &mut impl Write, header: &str) -> Result<()> {
        if !header.is_empty() {
            writeln!(w, "# {header}")?;
        }
        if self.mesh.dim == 1 {
            writeln!(w, "vertex_id,x,value")?;
            for (i, (&v, val)) in self.mesh.vertices.iter().zip(&self.values).enumerate() {
                writeln!(w, "{i},{},{}", v[0], val)?;
            }
        } else {
            writeln!(w, "vertex_id,x,y,value")?;
            for (i, (&v, val)) in self.mesh.vertices.iter().zip(&self.values).enumerate() {
                writeln!(w, "{i},{},{},{}", v[0], v[1], val)?;
            }
        }
        Ok(())
    }

    /// Reads nodal values, checking the coordinates against the mesh.
    pub fn read_csv(mesh: &Arc<Mesh>, r: impl BufRead) -> Result<Self> {
        let mut values = vec![f64::NAN; mesh.vertex_count()];
        for line in r.lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("vertex_id") {
                continue;
            }
            let cols: Vec<&str> = trimmed.split(',').collect();
            let expect = 2 + mesh.dim;
            if cols.len() != expect {
                return Err(Error::MeshMismatch(format!(
                    "expected {expect} columns, got {} in `{trimmed}`",
                    cols.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::MeshMismatch(format!("bad number `{s}`")))
            };
            let id = cols[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::MeshMismatch(format!("bad vertex id `{}`", cols[0])))?;
            if id >= mesh.vertex_count() {
                return Err(Error::MeshMismatch(format!(
                    "vertex id {id} out of range (mesh has {})",
                    mesh.vertex_count()
                )));
            }
            let x = parse(cols[1])?;
            let y = if mesh.dim == 2 { parse(cols[2])? } else { 0.0 };
            let v = mesh.vertices[id];
            if (v[0] - x).abs() > 1e-9 || (v[1] - y).abs() > 1e-9 {
                return Err(Error::MeshMismatch(format!(
                    "vertex {id} coordinates ({x}, {y}) do not match the mesh ({}, {})",
                    v[0], v[1]
                )));
            }
            values[id] = parse(cols[mesh.dim + 1])?;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::MeshMismatch("missing vertex rows".into()));
        }
        Ok(MeshFunction { mesh: mesh.clone(), values })
    }
}
