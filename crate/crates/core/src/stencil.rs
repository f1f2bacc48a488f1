//! Finite-difference stencils on structured meshes.
//!
//! Interior nodes use second-order central differences. Where a neighbor is
//! missing along an axis the stencil falls back to second-order one-sided
//! differences, and the result is flagged.

use crate::mesh::{Mesh, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilKind {
    Central,
    OneSided,
    /// No stencil fits (the disk center, or too few nodes along an axis).
    Unavailable,
}

/// Partial derivatives of a field at one node, in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDerivatives {
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub kind: StencilKind,
}

type Taps = Vec<(isize, f64)>;

struct AxisStencil {
    first: Taps,
    second: Taps,
    central: bool,
}

fn axis_stencil(mesh: &Mesh, i: usize, j: usize, axis: usize, h: f64) -> Option<AxisStencil> {
    let has = |o: isize| {
        if axis == 0 {
            mesh.neighbor(i, j, o, 0).is_some()
        } else {
            mesh.neighbor(i, j, 0, o).is_some()
        }
    };
    if has(-1) && has(1) {
        return Some(AxisStencil {
            first: vec![(-1, -0.5 / h), (1, 0.5 / h)],
            second: vec![(-1, 1.0 / (h * h)), (0, -2.0 / (h * h)), (1, 1.0 / (h * h))],
            central: true,
        });
    }
    let s: isize = if has(1) { 1 } else { -1 };
    if !(has(s) && has(2 * s) && has(3 * s)) {
        return None;
    }
    let sf = s as f64;
    Some(AxisStencil {
        first: vec![(0, -1.5 * sf / h), (s, 2.0 * sf / h), (2 * s, -0.5 * sf / h)],
        second: vec![
            (0, 2.0 / (h * h)),
            (s, -5.0 / (h * h)),
            (2 * s, 4.0 / (h * h)),
            (3 * s, -1.0 / (h * h)),
        ],
        central: false,
    })
}

/// Gradient and coordinate Hessian of `field` at logical node `(i, j)`.
pub fn derivatives(field: &ScalarField, i: usize, j: usize) -> NodeDerivatives {
    let mesh = field.mesh();
    let unavailable = NodeDerivatives {
        grad: [0.0; 2],
        hess: [[0.0; 2]; 2],
        kind: StencilKind::Unavailable,
    };
    if matches!(mesh, Mesh::PolarDisk { .. }) && i == 0 {
        return unavailable;
    }
    let h = mesh.widths();
    let (Some(s1), Some(s2)) = (axis_stencil(mesh, i, j, 0, h[0]), axis_stencil(mesh, i, j, 1, h[1])) else {
        return unavailable;
    };
    // Differences against the center value, so constants differentiate to exactly zero.
    let center = field.at(i, j);
    let value = |di: isize, dj: isize| {
        let (a, b) = mesh
            .neighbor(i, j, di, dj)
            .expect("stencil taps are checked against the mesh");
        field.at(a, b) - center
    };
    let apply1 = |taps: &Taps| taps.iter().map(|&(o, w)| w * value(o, 0)).sum::<f64>();
    let apply2 = |taps: &Taps| taps.iter().map(|&(o, w)| w * value(0, o)).sum::<f64>();
    let mut mixed = 0.0;
    for &(o1, w1) in &s1.first {
        for &(o2, w2) in &s2.first {
            mixed += w1 * w2 * value(o1, o2);
        }
    }
    NodeDerivatives {
        grad: [apply1(&s1.first), apply2(&s2.first)],
        hess: [[apply1(&s1.second), mixed], [mixed, apply2(&s2.second)]],
        kind: if s1.central && s2.central {
            StencilKind::Central
        } else {
            StencilKind::OneSided
        },
    }
}

/// Cartesian gradient at the center of a polar disk, from the first Fourier
/// mode on rings 1 and 2 combined by Richardson extrapolation.
pub fn disk_center_gradient(field: &ScalarField) -> Option<[f64; 2]> {
    let mesh = field.mesh();
    let Mesh::PolarDisk { ntheta, nr, .. } = *mesh else {
        return None;
    };
    if nr < 3 {
        return None;
    }
    let h = mesh.widths();
    let mode = |ring: usize| {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..ntheta {
            let th = j as f64 * h[1];
            let v = field.at(ring, j);
            a += v * th.cos();
            b += v * th.sin();
        }
        let scale = 2.0 / ntheta as f64;
        [a * scale, b * scale]
    };
    let m1 = mode(1);
    let m2 = mode(2);
    let r = h[0];
    Some([
        (4.0 * m1[0] / r - m2[0] / (2.0 * r)) / 3.0,
        (4.0 * m1[1] / r - m2[1] / (2.0 * r)) / 3.0,
    ])
}

/// Nodes whose full 3×3 stencil neighborhood consists of central-stencil
/// nodes. Derived quantities that difference other differenced fields are
/// only second-order accurate there.
pub fn deep_interior(mesh: &Mesh) -> Vec<bool> {
    let central = |i: usize, j: usize| {
        let (n1, n2) = mesh.shape();
        match mesh {
            Mesh::Box { .. } => i >= 1 && j >= 1 && i + 1 < n1 && j + 1 < n2,
            Mesh::PolarAnnulus { .. } => i >= 1 && i + 1 < n1,
            Mesh::PolarDisk { .. } => i >= 1 && i + 1 < n1,
        }
    };
    (0..mesh.num_nodes())
        .map(|k| {
            let (i, j) = mesh.logical(k);
            if matches!(mesh, Mesh::PolarDisk { .. }) && i == 0 {
                return false;
            }
            (-1..=1).all(|di| {
                (-1..=1).all(|dj| match mesh.neighbor(i, j, di, dj) {
                    Some((a, b)) => {
                        !(matches!(mesh, Mesh::PolarDisk { .. }) && a == 0) && central(a, b)
                    }
                    None => false,
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratics_are_exact() {
        let mesh = Mesh::Box { x: [-1.0, 1.0], y: [0.0, 2.0], nx: 9, ny: 11 };
        let f = ScalarField::from_fn(mesh, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[0] + 3.0 * p[0] * p[1] - p[1] * p[1]).unwrap();
        for k in 0..mesh.num_nodes() {
            let (i, j) = mesh.logical(k);
            let p = mesh.coords(i, j);
            let d = derivatives(&f, i, j);
            assert_ne!(d.kind, StencilKind::Unavailable);
            assert_eq!(d.kind == StencilKind::Central, !mesh.is_boundary(k));
            assert_abs_diff_eq!(d.grad[0], 2.0 + p[0] + 3.0 * p[1], epsilon = 1e-11);
            assert_abs_diff_eq!(d.grad[1], -1.0 + 3.0 * p[0] - 2.0 * p[1], epsilon = 1e-11);
            assert_abs_diff_eq!(d.hess[0][0], 1.0, epsilon = 1e-9);
            assert_abs_diff_eq!(d.hess[0][1], 3.0, epsilon = 1e-9);
            assert_abs_diff_eq!(d.hess[1][1], -2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn center_gradient_of_plane() {
        let mesh = Mesh::PolarDisk { radius: 1.0, nr: 9, ntheta: 16 };
        let f = ScalarField::from_fn(mesh, |p| 0.3 + 0.7 * p[0] * p[1].cos() - 0.2 * p[0] * p[1].sin()).unwrap();
        let g = disk_center_gradient(&f).unwrap();
        assert_abs_diff_eq!(g[0], 0.7, epsilon = 1e-13);
        assert_abs_diff_eq!(g[1], -0.2, epsilon = 1e-13);
        // cubic term is removed by the extrapolation
        let f = ScalarField::from_fn(mesh, |p| {
            let (x, y) = (p[0] * p[1].cos(), p[0] * p[1].sin());
            x + x * x * x + x * y * y
        })
        .unwrap();
        assert_abs_diff_eq!(disk_center_gradient(&f).unwrap()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn deep_interior_excludes_two_layers() {
        let mesh = Mesh::unit_square(9);
        let deep = deep_interior(&mesh);
        assert_eq!(deep.iter().filter(|d| **d).count(), 5 * 5);
        let disk = Mesh::PolarDisk { radius: 1.0, nr: 7, ntheta: 8 };
        let deep = deep_interior(&disk);
        // rings 2..=4
        assert_eq!(deep.iter().filter(|d| **d).count(), 3 * 8);
    }
}
