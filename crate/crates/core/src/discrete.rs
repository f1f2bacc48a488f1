//! Discrete area functional shared by the Newton solver and the oracle.
//!
//! Every cell contributes one term per corner `P`. With `Q₁`, `Q₂` the cell
//! corners adjacent to `P` along each axis, the term is
//!
//! ```text
//! ω · √(1 + c₁ (u_{Q₁} − u_P)² + c₂ (u_{Q₂} − u_P)²),   c_k = σ^{kk}(edge midpoint) / h_k²,
//! ```
//!
//! with `ω = ¼ √σ(cell center) h₁ h₂`. The four corner terms of a cell are
//! staggered gradients on the cell edges, so the first variation is a
//! flux-difference form of `div(√σ ∇u / W)`. Its Hessian is positive
//! definite on the interior unknowns, which gives Newton an exact SPD
//! Jacobian and the scheme a discrete maximum principle for the diagonal
//! chart metrics used here.
//!
//! The radial layout is the rotationally symmetric reduction: one ring per
//! cell, weight `2π f(r_c) h` split over the two cell endpoints.

use std::f64::consts::TAU;

use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::metric::ChartMetric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerTerm {
    pub p: usize,
    pub q1: Option<usize>,
    pub q2: Option<usize>,
    pub c1: f64,
    pub c2: f64,
    pub weight: f64,
}

impl CornerTerm {
    fn diffs(&self, u: &[f64]) -> (f64, f64) {
        let d = |q: Option<usize>| q.map_or(0.0, |q| u[q] - u[self.p]);
        (d(self.q1), d(self.q2))
    }

    /// `W` of the term.
    pub fn lift(&self, u: &[f64]) -> f64 {
        let (d1, d2) = self.diffs(u);
        (1.0 + self.c1 * d1 * d1 + self.c2 * d2 * d2).sqrt()
    }
}

/// Corner terms plus nodal volumes for one discretized domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaLayout {
    pub num_nodes: usize,
    pub terms: Vec<CornerTerm>,
    /// `V_p = Σ ω` over the terms anchored at `p`.
    pub volumes: Vec<f64>,
    pub boundary: Vec<bool>,
}

impl AreaLayout {
    fn finish(num_nodes: usize, terms: Vec<CornerTerm>, boundary: Vec<bool>) -> Result<Self> {
        let mut volumes = vec![0.0; num_nodes];
        for t in &terms {
            volumes[t.p] += t.weight;
        }
        if let Some(k) = volumes.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Geometry(format!("node {k} has no positive control volume")));
        }
        Ok(Self {
            num_nodes,
            terms,
            volumes,
            boundary,
        })
    }

    /// Layout on a 2-D structured mesh.
    pub fn planar(metric: &ChartMetric, mesh: &Mesh) -> Result<Self> {
        mesh.check_compatible(metric)?;
        if !matches!(metric.kind(), crate::metric::MetricKind::Euclidean) && metric.warp().is_none() {
            return Err(Error::Contract("the area layout needs a diagonal chart metric".into()));
        }
        let h = mesh.widths();
        let mut terms = Vec::with_capacity(4 * mesh.num_nodes());
        for (i, j) in mesh.cells() {
            let x = mesh.coords(i, j);
            let center = [x[0] + 0.5 * h[0], x[1] + 0.5 * h[1]];
            let (sqrt_sigma, _) = metric.diagonal_2d(center);
            let weight = 0.25 * sqrt_sigma * h[0] * h[1];
            for (a, b) in [(0usize, 0usize), (1, 0), (1, 1), (0, 1)] {
                let node = |da: usize, db: usize| {
                    let (ii, jj) = mesh
                        .neighbor(i, j, da as isize, db as isize)
                        .expect("cell corners exist");
                    mesh.index(ii, jj)
                };
                let p = node(a, b);
                let q1 = node(1 - a, b);
                let q2 = node(a, 1 - b);
                // Edge midpoints along each axis from P.
                let pc = mesh.coords(i + a, j + b);
                let e1 = [x[0] + 0.5 * h[0], pc[1]];
                let e2 = [pc[0], x[1] + 0.5 * h[1]];
                let a1 = metric.diagonal_2d(e1).1[0];
                let a2 = metric.diagonal_2d(e2).1[1];
                // At the disk center the axis-2 edge collapses to a point.
                let q2 = (q2 != p && a2.is_finite()).then_some(q2);
                terms.push(CornerTerm {
                    p,
                    q1: Some(q1),
                    q2,
                    c1: a1 / (h[0] * h[0]),
                    c2: if q2.is_some() { a2 / (h[1] * h[1]) } else { 0.0 },
                    weight,
                });
            }
        }
        Self::finish(mesh.num_nodes(), terms, mesh.boundary_mask())
    }

    /// Rotationally symmetric layout on the rings of a polar mesh. Node `i` is
    /// ring `i` (the disk center for `i = 0` on a disk).
    pub fn radial(metric: &ChartMetric, mesh: &Mesh) -> Result<Self> {
        mesh.check_compatible(metric)?;
        let warp = metric
            .warp()
            .ok_or_else(|| Error::Contract("radial reduction needs a rotationally symmetric metric".into()))?;
        let (nr, _) = mesh.shape();
        let h = mesh.widths()[0];
        let r_at = |i: usize| mesh.coords(i, 0)[0];
        let mut terms = Vec::with_capacity(2 * nr);
        for i in 0..nr - 1 {
            let (f, _, _) = warp.eval(r_at(i) + 0.5 * h);
            let weight = 0.5 * TAU * f * h;
            for (p, q) in [(i, i + 1), (i + 1, i)] {
                terms.push(CornerTerm {
                    p,
                    q1: Some(q),
                    q2: None,
                    c1: 1.0 / (h * h),
                    c2: 0.0,
                    weight,
                });
            }
        }
        let mut boundary = vec![false; nr];
        boundary[nr - 1] = true;
        if matches!(mesh, Mesh::PolarAnnulus { .. }) {
            boundary[0] = true;
        }
        Self::finish(nr, terms, boundary)
    }

    /// `Σ ω W`.
    pub fn area(&self, u: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.weight * t.lift(u)).sum()
    }

    /// `∂A/∂u` at every node (boundary entries included).
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_nodes];
        for t in &self.terms {
            let (d1, d2) = t.diffs(u);
            let w = (1.0 + t.c1 * d1 * d1 + t.c2 * d2 * d2).sqrt();
            let s1 = t.weight * t.c1 * d1 / w;
            let s2 = t.weight * t.c2 * d2 / w;
            if let Some(q) = t.q1 {
                g[q] += s1;
            }
            if let Some(q) = t.q2 {
                g[q] += s2;
            }
            g[t.p] -= s1 + s2;
        }
        g
    }

    /// Discrete minimal surface operator `−(∂A/∂u)/V`, zero on the boundary.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        let g = self.gradient(u);
        g.iter()
            .zip(&self.volumes)
            .zip(&self.boundary)
            .map(|((g, v), b)| if *b { 0.0 } else { -g / v })
            .collect()
    }

    /// Hessian of the area restricted to interior unknowns, with identity rows
    /// on boundary nodes. Symmetric positive definite.
    pub fn hessian(&self, u: &[f64]) -> CscMatrix<f64> {
        let mut coo = CooMatrix::new(self.num_nodes, self.num_nodes);
        for t in &self.terms {
            let (d1, d2) = t.diffs(u);
            let w = (1.0 + t.c1 * d1 * d1 + t.c2 * d2 * d2).sqrt();
            let g = [t.c1 * d1, t.c2 * d2];
            let c = [t.c1, t.c2];
            let mut hd = [[0.0; 2]; 2];
            for k in 0..2 {
                for l in 0..2 {
                    let diag = if k == l { c[k] } else { 0.0 };
                    hd[k][l] = t.weight * (diag - g[k] * g[l] / (w * w)) / w;
                }
            }
            // d_k = u_{q_k} − u_p: each row of ∂d/∂u has +1 at q_k and −1 at p.
            let qs = [t.q1, t.q2];
            let mut taps: Vec<(usize, [f64; 2])> = Vec::with_capacity(3);
            taps.push((t.p, [-1.0, if t.q2.is_some() { -1.0 } else { 0.0 }]));
            for (k, q) in qs.iter().enumerate() {
                if let Some(q) = q {
                    let mut e = [0.0; 2];
                    e[k] = 1.0;
                    taps.push((*q, e));
                }
            }
            for &(a, ea) in &taps {
                if self.boundary[a] {
                    continue;
                }
                for &(b, eb) in &taps {
                    if self.boundary[b] {
                        continue;
                    }
                    let mut v = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            v += ea[k] * hd[k][l] * eb[l];
                        }
                    }
                    if v != 0.0 {
                        coo.push(a, b, v);
                    }
                }
            }
        }
        for (k, b) in self.boundary.iter().enumerate() {
            if *b {
                coo.push(k, k, 1.0);
            }
        }
        CscMatrix::from(&coo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn field(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..mesh.num_nodes()).map(|k| f(mesh.node_coords(k))).collect()
    }

    #[test]
    fn slice_and_tilted_plane_areas() {
        let m = ChartMetric::euclidean(2, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mesh = Mesh::unit_square(9);
        let lay = AreaLayout::planar(&m, &mesh).unwrap();
        assert_relative_eq!(lay.area(&vec![0.3; mesh.num_nodes()]), 1.0, max_relative = 1e-14);
        assert_relative_eq!(lay.area(&field(&mesh, |p| p[0])), 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lay.volumes.iter().sum::<f64>(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn affine_fields_have_zero_residual() {
        let m = ChartMetric::euclidean(2, vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let mesh = Mesh::Box { x: [-1.0, 1.0], y: [0.0, 2.0], nx: 11, ny: 9 };
        let lay = AreaLayout::planar(&m, &mesh).unwrap();
        let r = lay.residual(&field(&mesh, |p| 0.5 - 2.0 * p[0] + 0.7 * p[1]));
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        let r = lay.residual(&vec![1.5; mesh.num_nodes()]);
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let m = ChartMetric::hyperbolic_polar(2, -1.0, 0.5, 2.0).unwrap();
        let mesh = Mesh::PolarAnnulus { r: [0.5, 2.0], nr: 8, ntheta: 6 };
        let lay = AreaLayout::planar(&m, &mesh).unwrap();
        let u = field(&mesh, |p| p[0].sin() + 0.3 * (2.0 * p[1]).cos());
        let h = lay.hessian(&u);
        let dense = nalgebra::DMatrix::from(&h);
        let eps = 1e-6;
        for k in 0..mesh.num_nodes() {
            if lay.boundary[k] {
                continue;
            }
            let mut up = u.clone();
            let mut dn = u.clone();
            up[k] += eps;
            dn[k] -= eps;
            let (gp, gm) = (lay.gradient(&up), lay.gradient(&dn));
            for l in 0..mesh.num_nodes() {
                if lay.boundary[l] {
                    continue;
                }
                let fd = (gp[l] - gm[l]) / (2.0 * eps);
                assert!((fd - dense[(l, k)]).abs() < 1e-7 * (1.0 + fd.abs()), "({l},{k}) {fd} vs {}", dense[(l, k)]);
            }
        }
        assert!(dense.clone().cholesky().is_some());
        assert_relative_eq!(dense.clone(), dense.transpose(), epsilon = 1e-14);
    }

    #[test]
    fn radial_layout_matches_planar() {
        let m = ChartMetric::flat_polar(1.0, 3.0).unwrap();
        let nth = 12;
        let mesh = Mesh::PolarAnnulus { r: [1.0, 3.0], nr: 9, ntheta: nth };
        let planar = AreaLayout::planar(&m, &mesh).unwrap();
        let radial = AreaLayout::radial(&m, &mesh).unwrap();
        let prof = |r: f64| r.ln() + 0.1 * r * r;
        let u2 = field(&mesh, |p| prof(p[0]));
        let u1: Vec<f64> = (0..9).map(|i| prof(mesh.coords(i, 0)[0])).collect();
        assert_relative_eq!(planar.area(&u2), radial.area(&u1), max_relative = 1e-13);
        let r2 = planar.residual(&u2);
        let r1 = radial.residual(&u1);
        for i in 0..9 {
            assert_relative_eq!(r2[mesh.index(i, 3)], r1[i], epsilon = 1e-12);
            assert_relative_eq!(radial.volumes[i], nth as f64 * planar.volumes[mesh.index(i, 0)], max_relative = 1e-13);
        }
    }

    #[test]
    fn disk_layout_has_center_volume() {
        let m = ChartMetric::flat_polar(0.0, 1.0).unwrap();
        let mesh = Mesh::PolarDisk { radius: 1.0, nr: 9, ntheta: 16 };
        let lay = AreaLayout::planar(&m, &mesh).unwrap();
        // cell weights use f at the cell center, so the total is the midpoint rule for ∫ r dr dθ
        let h = 1.0 / 8.0;
        let exact: f64 = (0..8).map(|i| TAU * (i as f64 + 0.5) * h * h).sum();
        assert_relative_eq!(lay.volumes.iter().sum::<f64>(), exact, max_relative = 1e-13);
        assert!(lay.volumes[0] > 0.0);
        // Refining both directions, the plane r cos θ is reproduced to O(h²)
        // away from the center, and the center itself balances by symmetry.
        let mut errs = Vec::new();
        for (nr, nth) in [(9, 16), (17, 32), (33, 64)] {
            let mesh = Mesh::PolarDisk { radius: 1.0, nr, ntheta: nth };
            let lay = AreaLayout::planar(&m, &mesh).unwrap();
            let r = lay.residual(&field(&mesh, |p| 0.2 + p[0] * p[1].cos()));
            assert!(r[0].abs() < 1e-12);
            errs.push(
                (0..mesh.num_nodes())
                    .filter(|k| mesh.node_coords(*k)[0] >= 0.25)
                    .map(|k| r[k].abs())
                    .fold(0.0, f64::max),
            );
        }
        assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
    }
}
