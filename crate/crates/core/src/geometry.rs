//! Geometry of a graph `{(x, u(x))}` over a chart metric: gradient lift `W`,
//! normal, induced metric, second fundamental form, mean curvature, and the
//! residuals of the differential identities satisfied by minimal graphs.
//!
//! All derivatives come from the stencils in [`crate::stencil`]. The same
//! discrete `∇u` feeds `W`, `g_ij`, `g^ij` and `N`, so the algebraic identities
//! (`det g = σ W²`, `g g⁻¹ = I`) hold to rounding, while the differential
//! identities carry an `O(h²)` truncation residual.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, ScalarField};
use crate::metric::ChartMetric;
use crate::stencil::{deep_interior, derivatives, disk_center_gradient, NodeDerivatives, StencilKind};

/// Metric data at a node, converted to fixed-size 2-D types.
#[derive(Debug, Clone, Copy)]
pub struct NodeMetric {
    pub sigma: Matrix2<f64>,
    pub sigma_inv: Matrix2<f64>,
    /// `gamma[k]` is the matrix `Γ^k_ij`.
    pub gamma: [Matrix2<f64>; 2],
    pub ricci: Matrix2<f64>,
}

impl NodeMetric {
    pub fn at(metric: &ChartMetric, x: [f64; 2]) -> Result<Self> {
        let jet = metric.jet(&x)?;
        let s = &jet.sigma;
        let sigma = Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
        let det = sigma.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Geometry(format!("degenerate metric at {x:?} (det σ = {det})")));
        }
        let sigma_inv = sigma
            .try_inverse()
            .ok_or_else(|| Error::Geometry(format!("singular metric at {x:?}")))?;
        let g = metric.christoffel(&x)?;
        let gamma = [0, 1].map(|k| Matrix2::new(g.get(k, 0, 0), g.get(k, 0, 1), g.get(k, 1, 0), g.get(k, 1, 1)));
        let r = metric.ricci_tensor(&x)?;
        let ricci = Matrix2::new(r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]);
        Ok(Self {
            sigma,
            sigma_inv,
            gamma,
            ricci,
        })
    }

    /// `D_iD_j f = ∂_i∂_j f − Γ^k_ij ∂_k f`.
    pub fn covariant_hessian(&self, d: &NodeDerivatives) -> Matrix2<f64> {
        let hess = Matrix2::new(d.hess[0][0], d.hess[0][1], d.hess[1][0], d.hess[1][1]);
        hess - self.gamma[0] * d.grad[0] - self.gamma[1] * d.grad[1]
    }
}

/// Geometric quantities of the graph at one node.
#[derive(Debug, Clone, Copy)]
pub struct NodeGeometry {
    pub coords: [f64; 2],
    pub stencil: StencilKind,
    pub metric: NodeMetric,
    /// `W = √(1 + σ^{ij} u_i u_j)`.
    pub w: f64,
    /// Partial derivatives `u_i`.
    pub grad_lower: Vector2<f64>,
    /// `u^i = σ^{ij} u_j`.
    pub grad_upper: Vector2<f64>,
    /// Upward unit normal `(−u^1, −u^2, 1)/W` in coordinate components.
    pub normal: [f64; 3],
    /// `g_ij = σ_ij + u_i u_j`.
    pub induced: Matrix2<f64>,
    /// `g^ij = σ^ij − u^i u^j / W²`.
    pub induced_inv: Matrix2<f64>,
    pub covariant_hessian: Matrix2<f64>,
    /// `b_ij = D_iD_j u / W`.
    pub sff: Matrix2<f64>,
    /// `H = g^{ij} b_ij / n`.
    pub mean_curvature: f64,
    /// `|A|² = g^{ik} g^{jl} b_ij b_kl`.
    pub norm_a_sq: f64,
    /// Angle function `W⁻¹ = ⟨N, ∂_t⟩`.
    pub angle: f64,
}

impl NodeGeometry {
    fn from_derivatives(metric: NodeMetric, coords: [f64; 2], d: &NodeDerivatives) -> Self {
        let grad_lower = Vector2::new(d.grad[0], d.grad[1]);
        let grad_upper = metric.sigma_inv * grad_lower;
        let w = (1.0 + grad_lower.dot(&grad_upper)).sqrt();
        let induced = metric.sigma + grad_lower * grad_lower.transpose();
        let induced_inv = metric.sigma_inv - grad_upper * grad_upper.transpose() / (w * w);
        let covariant_hessian = metric.covariant_hessian(d);
        let sff = covariant_hessian / w;
        let n = 2.0;
        let mean_curvature = (induced_inv * sff).trace() / n;
        let gb = induced_inv * sff;
        let norm_a_sq = (gb * gb).trace().max(0.0);
        Self {
            coords,
            stencil: d.kind,
            metric,
            w,
            grad_lower,
            grad_upper,
            normal: [-grad_upper[0] / w, -grad_upper[1] / w, 1.0 / w],
            induced,
            induced_inv,
            covariant_hessian,
            sff,
            mean_curvature,
            norm_a_sq,
            angle: 1.0 / w,
        }
    }

    /// `|∇^M u|`.
    pub fn grad_norm(&self) -> f64 {
        self.grad_lower.dot(&self.grad_upper).max(0.0).sqrt()
    }

    /// `(1 − W⁻²) Ric^M(γ, γ) = Ric_ij u^i u^j / W²`, zero where `∇u = 0`.
    pub fn ricci_normal_term(&self) -> f64 {
        let u = self.grad_upper;
        (u.transpose() * self.metric.ricci * u)[(0, 0)] / (self.w * self.w)
    }
}

/// Per-node geometry for a height field. Entries are `None` where no stencil
/// fits (the disk center).
#[derive(Debug, Clone)]
pub struct GeometricQuantities {
    pub mesh: Mesh,
    pub nodes: Vec<Option<NodeGeometry>>,
}

impl GeometricQuantities {
    pub fn interior(&self) -> impl Iterator<Item = &NodeGeometry> {
        self.nodes
            .iter()
            .flatten()
            .filter(|g| g.stencil == StencilKind::Central)
    }
}

/// Evaluates every geometric quantity at each node of `u`.
pub fn compute_quantities(metric: &ChartMetric, u: &ScalarField) -> Result<GeometricQuantities> {
    let mesh = *u.mesh();
    mesh.check_compatible(metric)?;
    let nodes = (0..mesh.num_nodes())
        .map(|k| {
            let (i, j) = mesh.logical(k);
            let d = derivatives(u, i, j);
            if d.kind == StencilKind::Unavailable {
                return Ok(None);
            }
            let x = mesh.coords(i, j);
            let nm = NodeMetric::at(metric, x)?;
            Ok(Some(NodeGeometry::from_derivatives(nm, x, &d)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeometricQuantities { mesh, nodes })
}

/// Covariant Hessian of `field` at logical node `(i, j)` with the stencil
/// kind used (boundary nodes fall back to one-sided stencils).
pub fn covariant_hessian(
    metric: &ChartMetric,
    field: &ScalarField,
    i: usize,
    j: usize,
) -> Result<(Matrix2<f64>, StencilKind)> {
    let mesh = field.mesh();
    mesh.check_compatible(metric)?;
    let d = derivatives(field, i, j);
    if d.kind == StencilKind::Unavailable {
        return Err(Error::Domain(format!("no stencil fits at node ({i}, {j})")));
    }
    let nm = NodeMetric::at(metric, mesh.coords(i, j))?;
    Ok((nm.covariant_hessian(&d), d.kind))
}

/// `W` at every node, using one-sided stencils on the boundary and the
/// Fourier-mode gradient at a disk center (where the chart metric is the
/// identity in Cartesian coordinates).
pub fn gradient_lift_field(metric: &ChartMetric, u: &ScalarField) -> Result<ScalarField> {
    let geo = compute_quantities(metric, u)?;
    lift_from_geometry(&geo, u)
}

fn lift_from_geometry(geo: &GeometricQuantities, u: &ScalarField) -> Result<ScalarField> {
    let mesh = geo.mesh;
    let mut values = Vec::with_capacity(mesh.num_nodes());
    for node in &geo.nodes {
        match node {
            Some(g) => values.push(g.w),
            None => {
                let grad = disk_center_gradient(u)
                    .ok_or_else(|| Error::Geometry("no gradient stencil at a node".into()))?;
                values.push((1.0 + grad[0] * grad[0] + grad[1] * grad[1]).sqrt());
            }
        }
    }
    ScalarField::new(mesh, values)
}

/// Nodal values of a derived quantity. `valid` marks nodes where the value
/// carries the full second-order accuracy.
#[derive(Debug, Clone)]
pub struct DerivedField {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DerivedField {
    /// Largest `|value|` over valid nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|value|` over valid nodes whose chart coordinates satisfy
    /// `keep`. Refinement studies use a fixed region so that every level is
    /// measured at the same physical points.
    pub fn sup_norm_in(&self, keep: impl Fn([f64; 2]) -> bool) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.valid[*k] && keep(self.mesh.node_coords(*k)))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Pointwise `a − b` (valid where both are).
    pub fn minus(&self, other: &DerivedField) -> DerivedField {
        DerivedField {
            mesh: self.mesh,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            valid: self.valid.iter().zip(&other.valid).map(|(a, b)| *a && *b).collect(),
        }
    }

    /// Largest `|a − b|` over nodes valid in both.
    pub fn sup_difference(&self, other: &DerivedField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.valid.iter().zip(&other.valid))
            .filter(|(_, (a, b))| **a && **b)
            .map(|((x, y), _)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

fn check_same_mesh(u: &ScalarField, f: &ScalarField) -> Result<()> {
    if u.mesh() != f.mesh() {
        return Err(Error::Contract("fields live on different meshes".into()));
    }
    Ok(())
}

/// `Δ^S f = g^{ij} D_iD_j f` with the induced metric of the graph of `u`.
pub fn surface_laplacian(metric: &ChartMetric, u: &ScalarField, f: &ScalarField) -> Result<DerivedField> {
    check_same_mesh(u, f)?;
    let geo = compute_quantities(metric, u)?;
    Ok(surface_laplacian_with(&geo, f, |g| g.stencil == StencilKind::Central))
}

fn surface_laplacian_with(
    geo: &GeometricQuantities,
    f: &ScalarField,
    valid: impl Fn(&NodeGeometry) -> bool,
) -> DerivedField {
    let mesh = geo.mesh;
    let mut values = vec![0.0; mesh.num_nodes()];
    let mut ok = vec![false; mesh.num_nodes()];
    for (k, node) in geo.nodes.iter().enumerate() {
        if let Some(g) = node {
            let (i, j) = mesh.logical(k);
            let d = derivatives(f, i, j);
            let dd = g.metric.covariant_hessian(&d);
            values[k] = g.induced_inv.component_mul(&dd).sum();
            ok[k] = valid(g);
        }
    }
    DerivedField {
        mesh,
        values,
        valid: ok,
    }
}

/// `Δ^S(W⁻¹) + (|A|² + Ric~(N, N)) W⁻¹` at every node; vanishes in the limit
/// on minimal graphs.
pub fn jacobi_residual(metric: &ChartMetric, u: &ScalarField) -> Result<DerivedField> {
    let geo = compute_quantities(metric, u)?;
    let w = lift_from_geometry(&geo, u)?;
    let angle = ScalarField::new(*u.mesh(), w.values().iter().map(|w| 1.0 / w).collect())?;
    let deep = deep_interior(u.mesh());
    let mut out = surface_laplacian_with(&geo, &angle, |_| true);
    for (k, node) in geo.nodes.iter().enumerate() {
        if let Some(g) = node {
            out.values[k] += (g.norm_a_sq + g.ricci_normal_term()) * g.angle;
        }
        out.valid[k] = deep[k];
    }
    Ok(out)
}

/// Both sides of the identity for `Lh = Δ^S h − 2 g^{ij} (D_iW / W) D_j h`
/// with `h = ηW`.
#[derive(Debug, Clone)]
pub struct LOperatorResult {
    /// `Lh` evaluated by differencing `h`.
    pub lh: DerivedField,
    /// The closed-form right-hand side.
    pub rhs: DerivedField,
}

impl LOperatorResult {
    pub fn residual_sup(&self) -> f64 {
        self.lh.sup_difference(&self.rhs)
    }
}

fn l_operator_parts(
    metric: &ChartMetric,
    u: &ScalarField,
    eta: &ScalarField,
) -> Result<(GeometricQuantities, ScalarField, DerivedField)> {
    check_same_mesh(u, eta)?;
    if let Some(k) = eta.values().iter().position(|v| *v < 0.0) {
        return Err(Error::Contract(format!("η must be nonnegative, η = {} at node {k}", eta.values()[k])));
    }
    let geo = compute_quantities(metric, u)?;
    let w = lift_from_geometry(&geo, u)?;
    let h = ScalarField::new(
        *u.mesh(),
        eta.values().iter().zip(w.values()).map(|(e, w)| e * w).collect(),
    )?;
    let mesh = *u.mesh();
    let deep = deep_interior(&mesh);
    let mut lh = surface_laplacian_with(&geo, &h, |_| true);
    for (k, node) in geo.nodes.iter().enumerate() {
        lh.valid[k] = deep[k];
        if let Some(g) = node {
            let (i, j) = mesh.logical(k);
            let dw = derivatives(&w, i, j).grad;
            let dh = derivatives(&h, i, j).grad;
            let dw = Vector2::new(dw[0], dw[1]);
            let dh = Vector2::new(dh[0], dh[1]);
            lh.values[k] -= 2.0 * (dw.transpose() * g.induced_inv * dh)[(0, 0)] / g.w;
        }
    }
    Ok((geo, w, lh))
}

/// `Lh` for `h = ηW` together with `W(Δ^S η + η(|A|² + (1 − W⁻²)Ric^M(γ, γ)))`.
pub fn l_operator(metric: &ChartMetric, u: &ScalarField, eta: &ScalarField) -> Result<LOperatorResult> {
    let (geo, _, lh) = l_operator_parts(metric, u, eta)?;
    let deep = deep_interior(u.mesh());
    let mut rhs = surface_laplacian_with(&geo, eta, |_| true);
    for (k, node) in geo.nodes.iter().enumerate() {
        rhs.valid[k] = deep[k];
        if let Some(g) = node {
            let e = eta.values()[k];
            rhs.values[k] = g.w * (rhs.values[k] + e * (g.norm_a_sq + g.ricci_normal_term()));
        }
    }
    Ok(LOperatorResult { lh, rhs })
}

/// `Lh` for `h = e^{αu} W` together with the closed form
/// `h(|A|² + (1 − W⁻²)(α² + Ric^M(γ, γ)))`, valid on minimal graphs.
pub fn l_operator_exponential(metric: &ChartMetric, u: &ScalarField, alpha: f64) -> Result<LOperatorResult> {
    let eta = ScalarField::new(*u.mesh(), u.values().iter().map(|v| (alpha * v).exp()).collect())?;
    let (geo, w, lh) = l_operator_parts(metric, u, &eta)?;
    let deep = deep_interior(u.mesh());
    let mut values = vec![0.0; w.values().len()];
    for (k, node) in geo.nodes.iter().enumerate() {
        if let Some(g) = node {
            let h = eta.values()[k] * g.w;
            let tilt = 1.0 - 1.0 / (g.w * g.w);
            values[k] = h * (g.norm_a_sq + tilt * alpha * alpha + g.ricci_normal_term());
        }
    }
    Ok(LOperatorResult {
        lh,
        rhs: DerivedField {
            mesh: *u.mesh(),
            values,
            valid: deep,
        },
    })
}

/// Stability identity `Δ^S W − 2W⁻¹|∇^S W|² − W|A|² − W(1 − W⁻²)Ric^M(γ, γ)`
/// (the `η ≡ 1` case of [`l_operator`]), returned as a residual field.
pub fn stability_residual(metric: &ChartMetric, u: &ScalarField) -> Result<DerivedField> {
    let one = ScalarField::constant(*u.mesh(), 1.0)?;
    let res = l_operator(metric, u, &one)?;
    let values = res.lh.values.iter().zip(&res.rhs.values).map(|(a, b)| a - b).collect();
    Ok(DerivedField {
        mesh: res.lh.mesh,
        values,
        valid: res.lh.valid,
    })
}

/// Worst relative deviation of `det(g_ij)` from `σ W²` over all nodes.
pub fn det_identity_check(metric: &ChartMetric, u: &ScalarField) -> Result<f64> {
    let geo = compute_quantities(metric, u)?;
    Ok(geo
        .nodes
        .iter()
        .flatten()
        .map(|g| {
            let lhs = g.induced.determinant();
            let rhs = g.metric.sigma.determinant() * g.w * g.w;
            (lhs - rhs).abs() / rhs.abs()
        })
        .fold(0.0, f64::max))
}

/// Worst entry of `g_ij g^{jk} − δ_i^k` over all nodes.
pub fn inverse_identity_check(metric: &ChartMetric, u: &ScalarField) -> Result<f64> {
    let geo = compute_quantities(metric, u)?;
    Ok(geo
        .nodes
        .iter()
        .flatten()
        .map(|g| (g.induced * g.induced_inv - Matrix2::identity()).abs().max())
        .fold(0.0, f64::max))
}
