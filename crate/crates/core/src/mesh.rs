//! Structured meshes and grid-sampled scalar fields.
//!
//! Nodes carry logical indices `(i, j)`: `i` runs along the first chart
//! coordinate (`x` or `r`), `j` along the second (`y` or `θ`). Polar meshes are
//! periodic in `j`. A polar disk collapses every `(0, j)` onto a single center
//! node.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::metric::{ChartDomain, ChartMetric};

/// Smallest number of interior nodes accepted per direction.
pub const MIN_INTERIOR_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mesh {
    /// Cartesian box `[x0, x1] × [y0, y1]` with `nx × ny` nodes including the boundary.
    Box {
        x: [f64; 2],
        y: [f64; 2],
        nx: usize,
        ny: usize,
    },
    /// Polar annulus `[r0, r1] × [0, 2π)`, `nr` rings including both boundary rings.
    PolarAnnulus { r: [f64; 2], nr: usize, ntheta: usize },
    /// Polar disk of the given radius: a center node plus `nr − 1` rings, the
    /// last of which is the boundary.
    PolarDisk { radius: f64, nr: usize, ntheta: usize },
}

impl Mesh {
    pub fn unit_square(n: usize) -> Self {
        Mesh::Box {
            x: [0.0, 1.0],
            y: [0.0, 1.0],
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        match *self {
            Mesh::Box { x, y, nx, ny } => {
                if !(x[0] < x[1] && y[0] < y[1]) || x.iter().chain(&y).any(|v| !v.is_finite()) {
                    return bad(format!("box mesh needs finite increasing extents, got {x:?} × {y:?}"));
                }
                if nx < MIN_INTERIOR_NODES + 2 || ny < MIN_INTERIOR_NODES + 2 {
                    return bad(format!(
                        "box mesh {nx}×{ny} has fewer than {MIN_INTERIOR_NODES} interior nodes per direction"
                    ));
                }
            }
            Mesh::PolarAnnulus { r, nr, ntheta } => {
                if !(r[0] > 0.0 && r[0] < r[1] && r[1].is_finite()) {
                    return bad(format!("annulus mesh needs 0 < r0 < r1, got {r:?}"));
                }
                if nr < MIN_INTERIOR_NODES + 2 || ntheta < MIN_INTERIOR_NODES {
                    return bad(format!(
                        "annulus mesh {nr}×{ntheta} has fewer than {MIN_INTERIOR_NODES} interior nodes per direction"
                    ));
                }
            }
            Mesh::PolarDisk { radius, nr, ntheta } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return bad(format!("disk mesh needs a positive radius, got {radius}"));
                }
                if nr < MIN_INTERIOR_NODES + 1 || ntheta < MIN_INTERIOR_NODES {
                    return bad(format!(
                        "disk mesh {nr}×{ntheta} has fewer than {MIN_INTERIOR_NODES} interior nodes per direction"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks that the mesh uses the metric's coordinates and lies in its domain.
    pub fn check_compatible(&self, metric: &ChartMetric) -> Result<()> {
        self.validate()?;
        if metric.dim() != 2 {
            return Err(Error::Domain(format!(
                "meshes are two-dimensional, metric has dimension {}",
                metric.dim()
            )));
        }
        let tol = 1e-12;
        match (self, metric.domain()) {
            (Mesh::Box { x, y, .. }, ChartDomain::Box { lo, hi }) => {
                if x[0] < lo[0] - tol || x[1] > hi[0] + tol || y[0] < lo[1] - tol || y[1] > hi[1] + tol {
                    return Err(Error::Domain("box mesh extends outside the chart domain".into()));
                }
            }
            (Mesh::PolarAnnulus { r, .. }, ChartDomain::Annulus { r_min, r_max }) => {
                if r[0] < r_min - tol || r[1] > r_max + tol {
                    return Err(Error::Domain(format!(
                        "annulus mesh [{}, {}] extends outside the chart domain [{r_min}, {r_max}]",
                        r[0], r[1]
                    )));
                }
            }
            (Mesh::PolarDisk { radius, .. }, ChartDomain::Annulus { r_min, r_max }) => {
                if *r_min > 0.0 || *radius > r_max + tol {
                    return Err(Error::Domain(format!(
                        "disk mesh of radius {radius} needs a chart domain [0, r_max >= radius], got [{r_min}, {r_max}]"
                    )));
                }
            }
            _ => {
                return Err(Error::Domain(
                    "mesh coordinates do not match the metric chart (box ↔ euclidean, polar ↔ polar)".into(),
                ))
            }
        }
        Ok(())
    }

    pub fn is_polar(&self) -> bool {
        !matches!(self, Mesh::Box { .. })
    }

    /// Logical extents `(n1, n2)`.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            Mesh::Box { nx, ny, .. } => (nx, ny),
            Mesh::PolarAnnulus { nr, ntheta, .. } | Mesh::PolarDisk { nr, ntheta, .. } => (nr, ntheta),
        }
    }

    /// Mesh widths `[h1, h2]`.
    pub fn widths(&self) -> [f64; 2] {
        match *self {
            Mesh::Box { x, y, nx, ny } => [(x[1] - x[0]) / (nx - 1) as f64, (y[1] - y[0]) / (ny - 1) as f64],
            Mesh::PolarAnnulus { r, nr, ntheta } => [(r[1] - r[0]) / (nr - 1) as f64, TAU / ntheta as f64],
            Mesh::PolarDisk { radius, nr, ntheta } => [radius / (nr - 1) as f64, TAU / ntheta as f64],
        }
    }

    fn origin(&self) -> [f64; 2] {
        match *self {
            Mesh::Box { x, y, .. } => [x[0], y[0]],
            Mesh::PolarAnnulus { r, .. } => [r[0], 0.0],
            Mesh::PolarDisk { .. } => [0.0, 0.0],
        }
    }

    pub fn num_nodes(&self) -> usize {
        let (n1, n2) = self.shape();
        match self {
            Mesh::PolarDisk { .. } => 1 + (n1 - 1) * n2,
            _ => n1 * n2,
        }
    }

    /// Node index of logical position `(i, j)`; `j` wraps on polar meshes.
    pub fn index(&self, i: usize, j: usize) -> usize {
        let (n1, n2) = self.shape();
        debug_assert!(i < n1);
        match self {
            Mesh::Box { .. } => j * n1 + i,
            Mesh::PolarAnnulus { .. } => i * n2 + j % n2,
            Mesh::PolarDisk { .. } => {
                if i == 0 {
                    0
                } else {
                    1 + (i - 1) * n2 + j % n2
                }
            }
        }
    }

    /// Logical position of a node index (the disk center maps to `(0, 0)`).
    pub fn logical(&self, idx: usize) -> (usize, usize) {
        let (n1, n2) = self.shape();
        match self {
            Mesh::Box { .. } => (idx % n1, idx / n1),
            Mesh::PolarAnnulus { .. } => (idx / n2, idx % n2),
            Mesh::PolarDisk { .. } => {
                if idx == 0 {
                    (0, 0)
                } else {
                    (1 + (idx - 1) / n2, (idx - 1) % n2)
                }
            }
        }
    }

    /// Chart coordinates of logical position `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        let o = self.origin();
        let h = self.widths();
        [o[0] + i as f64 * h[0], o[1] + j as f64 * h[1]]
    }

    pub fn node_coords(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.logical(idx);
        self.coords(i, j)
    }

    /// Position in the plane: the chart coordinates for a box, `(r cos θ, r sin θ)` for polar meshes.
    pub fn planar_position(&self, idx: usize) -> [f64; 2] {
        let x = self.node_coords(idx);
        if self.is_polar() {
            [x[0] * x[1].cos(), x[0] * x[1].sin()]
        } else {
            x
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (n1, n2) = self.shape();
        let (i, j) = self.logical(idx);
        match self {
            Mesh::Box { .. } => i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1,
            Mesh::PolarAnnulus { .. } => i == 0 || i == n1 - 1,
            Mesh::PolarDisk { .. } => i == n1 - 1,
        }
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.num_nodes()).map(|k| self.is_boundary(k)).collect()
    }

    /// Logical neighbor `(i + di, j + dj)`, wrapping `j` on polar meshes.
    /// Returns `None` outside the mesh.
    pub fn neighbor(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<(usize, usize)> {
        let (n1, n2) = self.shape();
        let ii = i as isize + di;
        if ii < 0 || ii >= n1 as isize {
            return None;
        }
        let jj = j as isize + dj;
        let jj = if self.is_polar() {
            jj.rem_euclid(n2 as isize)
        } else if jj < 0 || jj >= n2 as isize {
            return None;
        } else {
            jj
        };
        Some((ii as usize, jj as usize))
    }

    /// Lower-left logical corners of all cells.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (n1, n2) = self.shape();
        let n2_cells = if self.is_polar() { n2 } else { n2 - 1 };
        (0..n1 - 1).flat_map(move |i| (0..n2_cells).map(move |j| (i, j)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Mesh::Box { .. } => "box",
            Mesh::PolarAnnulus { .. } => "polar_annulus",
            Mesh::PolarDisk { .. } => "polar_disk",
        }
    }

    /// Dimension string used in field file headers, e.g. `17x17` or `65x32`.
    pub fn dims_label(&self) -> String {
        let (n1, n2) = self.shape();
        format!("{n1}x{n2}")
    }
}

/// A function sampled at the nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Mesh, values: Vec<f64>) -> Result<Self> {
        mesh.validate()?;
        if values.len() != mesh.num_nodes() {
            return Err(Error::Contract(format!(
                "field has {} values, mesh has {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite field value at node {k}")));
        }
        Ok(Self { mesh, values })
    }

    /// Samples `f` at every node's chart coordinates.
    pub fn from_fn(mesh: Mesh, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..mesh.num_nodes()).map(|k| f(mesh.node_coords(k))).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Mesh, c: f64) -> Result<Self> {
        Self::new(mesh, vec![c; mesh.num_nodes()])
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.index(i, j)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute nodewise difference to another field on the same mesh.
    pub fn sup_distance(&self, other: &ScalarField) -> Result<f64> {
        if self.mesh != other.mesh {
            return Err(Error::Contract("fields live on different meshes".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for mesh in [
            Mesh::unit_square(9),
            Mesh::PolarAnnulus { r: [1.0, 2.0], nr: 8, ntheta: 6 },
            Mesh::PolarDisk { radius: 1.0, nr: 7, ntheta: 8 },
        ] {
            for k in 0..mesh.num_nodes() {
                let (i, j) = mesh.logical(k);
                assert_eq!(mesh.index(i, j), k);
            }
        }
    }

    #[test]
    fn disk_collapses_center() {
        let mesh = Mesh::PolarDisk { radius: 2.0, nr: 7, ntheta: 8 };
        assert_eq!(mesh.num_nodes(), 1 + 6 * 8);
        assert_eq!(mesh.index(0, 5), 0);
        assert_eq!(mesh.neighbor(1, 3, -1, 0), Some((0, 3)));
        assert_eq!(mesh.neighbor(0, 3, -1, 0), None);
        assert_eq!(mesh.neighbor(2, 0, 0, -1), Some((2, 7)));
        assert!(mesh.is_boundary(mesh.index(6, 2)));
        assert!(!mesh.is_boundary(0));
    }

    #[test]
    fn coarse_meshes_rejected() {
        assert!(Mesh::unit_square(6).validate().is_err());
        assert!(Mesh::unit_square(7).validate().is_ok());
        assert!(Mesh::PolarAnnulus { r: [0.0, 1.0], nr: 9, ntheta: 8 }.validate().is_err());
    }

    #[test]
    fn cell_counts() {
        assert_eq!(Mesh::unit_square(9).cells().count(), 64);
        assert_eq!(Mesh::PolarAnnulus { r: [1.0, 2.0], nr: 8, ntheta: 6 }.cells().count(), 42);
    }

    #[test]
    fn field_rejects_nan_and_wrong_length() {
        let mesh = Mesh::unit_square(7);
        assert!(ScalarField::new(mesh, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 49];
        v[10] = f64::NAN;
        assert!(ScalarField::new(mesh, v).is_err());
    }
}
