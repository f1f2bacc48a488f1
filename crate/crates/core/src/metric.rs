//! Riemannian metrics on a single global coordinate chart.
//!
//! Three families are built in. `Euclidean` uses Cartesian coordinates in any
//! dimension. `HyperbolicPolar` and `RotationallySymmetric` use geodesic polar
//! coordinates `(r, θ)` with `σ = diag(1, f(r)²)`, so the radial coordinate is
//! the distance from the chart center. Coordinate-level operations on the polar
//! families (metric tensor, Christoffel symbols, Ricci tensor) are available
//! for `dim == 2`; the radial quantities (`Δ^M r`, curvature bounds) are
//! available in every dimension for the corresponding warped product
//! `dr² + f(r)² g_{S^{n-1}}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Warping function `f(r)` of a rotationally symmetric metric `dr² + f(r)² dθ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warp {
    /// `f(r) = r`, the flat plane in polar coordinates.
    Flat,
    /// `f(r) = sinh(√-κ r)/√-κ`, constant curvature `κ < 0`.
    Hyperbolic { kappa: f64 },
    /// `f(r) = sin(√κ r)/√κ`, constant curvature `κ > 0`.
    Spherical { kappa: f64 },
}

impl Warp {
    /// Returns `(f, f', f'')` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Warp::Flat => (r, 1.0, 0.0),
            Warp::Hyperbolic { kappa } => {
                let k = (-kappa).sqrt();
                let (s, c) = ((k * r).sinh(), (k * r).cosh());
                (s / k, c, k * s)
            }
            Warp::Spherical { kappa } => {
                let k = kappa.sqrt();
                let (s, c) = (k * r).sin_cos();
                (s / k, c, -k * s)
            }
        }
    }

    /// Sectional curvature of the model (constant for every built-in warp).
    pub fn curvature(&self) -> f64 {
        match *self {
            Warp::Flat => 0.0,
            Warp::Hyperbolic { kappa } | Warp::Spherical { kappa } => kappa,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            Warp::Flat => Ok(()),
            Warp::Hyperbolic { kappa } if kappa < 0.0 && kappa.is_finite() => Ok(()),
            Warp::Spherical { kappa } if kappa > 0.0 && kappa.is_finite() => Ok(()),
            w => Err(Error::Domain(format!("invalid warp parameters {w:?}"))),
        }
    }

    /// Largest radius on which `f > 0` (and `f` is increasing, for the spherical warp).
    pub(crate) fn radius_limit(&self) -> f64 {
        match *self {
            Warp::Spherical { kappa } => std::f64::consts::FRAC_PI_2 / kappa.sqrt(),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Euclidean,
    HyperbolicPolar { kappa: f64 },
    RotationallySymmetric { warp: Warp },
}

/// Coordinate region on which the chart metric is smooth and positive definite.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartDomain {
    /// Axis-aligned box `[lo_i, hi_i]` in Cartesian coordinates.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Polar annulus `[r_min, r_max] × [0, 2π)`. `r_min = 0` is allowed; the
    /// origin itself is then a coordinate singularity excluded from pointwise
    /// queries.
    Annulus { r_min: f64, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartMetric {
    dim: usize,
    kind: MetricKind,
    domain: ChartDomain,
}

/// Metric tensor with its first and second coordinate derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub sigma: DMatrix<f64>,
    /// `d_sigma[k] = ∂_k σ`.
    pub d_sigma: Vec<DMatrix<f64>>,
    /// `dd_sigma[k][l] = ∂_k ∂_l σ`.
    pub dd_sigma: Vec<Vec<DMatrix<f64>>>,
}

/// Christoffel symbols of the second kind, `Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let n = self.dim;
        self.data[(k * n + i) * n + j] = v;
    }
}

impl ChartMetric {
    pub fn euclidean(dim: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::new(dim, MetricKind::Euclidean, ChartDomain::Box { lo, hi })
    }

    pub fn hyperbolic_polar(dim: usize, kappa: f64, r_min: f64, r_max: f64) -> Result<Self> {
        Self::new(
            dim,
            MetricKind::HyperbolicPolar { kappa },
            ChartDomain::Annulus { r_min, r_max },
        )
    }

    pub fn rotationally_symmetric(dim: usize, warp: Warp, r_min: f64, r_max: f64) -> Result<Self> {
        Self::new(
            dim,
            MetricKind::RotationallySymmetric { warp },
            ChartDomain::Annulus { r_min, r_max },
        )
    }

    /// Flat plane in polar coordinates.
    pub fn flat_polar(r_min: f64, r_max: f64) -> Result<Self> {
        Self::rotationally_symmetric(2, Warp::Flat, r_min, r_max)
    }

    pub fn new(dim: usize, kind: MetricKind, domain: ChartDomain) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        match (&kind, &domain) {
            (MetricKind::Euclidean, ChartDomain::Box { lo, hi }) => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::Domain(format!(
                        "box domain needs {dim} bounds per side, got {} and {}",
                        lo.len(),
                        hi.len()
                    )));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return Err(Error::Domain("box domain needs lo < hi on every axis".into()));
                }
            }
            (MetricKind::Euclidean, ChartDomain::Annulus { .. }) => {
                return Err(Error::Domain(
                    "euclidean metric uses Cartesian coordinates; use a flat rotationally_symmetric metric for polar charts"
                        .into(),
                ))
            }
            (_, ChartDomain::Box { .. }) => {
                return Err(Error::Domain("polar metrics need an annulus domain".into()))
            }
            (_, ChartDomain::Annulus { r_min, r_max }) => {
                if dim < 2 {
                    return Err(Error::Domain("polar charts need dim >= 2".into()));
                }
                if !(*r_min >= 0.0 && r_min < r_max && r_max.is_finite()) {
                    return Err(Error::Domain(format!(
                        "annulus domain needs 0 <= r_min < r_max, got [{r_min}, {r_max}]"
                    )));
                }
            }
        }
        let metric = Self { dim, kind, domain };
        if let Some(warp) = metric.warp() {
            warp.validate()?;
            if let ChartDomain::Annulus { r_max, .. } = metric.domain {
                if r_max > warp.radius_limit() {
                    return Err(Error::Domain(format!(
                        "r_max = {r_max} exceeds the radius {} where the warp stops increasing",
                        warp.radius_limit()
                    )));
                }
            }
        }
        Ok(metric)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    /// True when coordinates are geodesic polar `(r, θ)`.
    pub fn is_polar(&self) -> bool {
        !matches!(self.kind, MetricKind::Euclidean)
    }

    /// Warping function of the polar families.
    pub fn warp(&self) -> Option<Warp> {
        match self.kind {
            MetricKind::Euclidean => None,
            MetricKind::HyperbolicPolar { kappa } => Some(Warp::Hyperbolic { kappa }),
            MetricKind::RotationallySymmetric { warp } => Some(warp),
        }
    }

    /// Constant sectional curvature of the built-in model.
    pub fn model_curvature(&self) -> f64 {
        self.warp().map_or(0.0, |w| w.curvature())
    }

    /// Checks that `x` is a valid chart point for pointwise evaluation.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        const SLACK: f64 = 1e-12;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {x:?}")));
        }
        match &self.domain {
            ChartDomain::Box { lo, hi } => {
                if x.len() != self.dim {
                    return Err(Error::Domain(format!(
                        "point has {} coordinates, metric has dimension {}",
                        x.len(),
                        self.dim
                    )));
                }
                for ((v, a), b) in x.iter().zip(lo).zip(hi) {
                    let tol = SLACK * (1.0 + a.abs().max(b.abs()));
                    if *v < a - tol || *v > b + tol {
                        return Err(Error::Domain(format!("point {x:?} outside box domain")));
                    }
                }
                Ok(())
            }
            ChartDomain::Annulus { r_min, r_max } => {
                if self.dim != 2 || x.len() != 2 {
                    return Err(Error::Domain(format!(
                        "pointwise polar evaluation is implemented for 2-D charts (dim = {})",
                        self.dim
                    )));
                }
                let r = x[0];
                let tol = SLACK * (1.0 + r_max);
                if r <= 0.0 {
                    return Err(Error::Domain(format!(
                        "r = {r} is the polar coordinate singularity"
                    )));
                }
                if r < r_min - tol || r > r_max + tol {
                    return Err(Error::Domain(format!(
                        "r = {r} outside [{r_min}, {r_max}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// σ_ij with analytic first and second derivatives.
    pub fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.check_point(x)?;
        let n = self.dim;
        let zero = DMatrix::<f64>::zeros(n, n);
        match self.warp() {
            None => Ok(MetricJet {
                sigma: DMatrix::identity(n, n),
                d_sigma: vec![zero.clone(); n],
                dd_sigma: vec![vec![zero; n]; n],
            }),
            Some(warp) => {
                let (f, fp, fpp) = warp.eval(x[0]);
                let mut sigma = DMatrix::identity(2, 2);
                sigma[(1, 1)] = f * f;
                let mut dr = zero.clone();
                dr[(1, 1)] = 2.0 * f * fp;
                let mut drr = zero.clone();
                drr[(1, 1)] = 2.0 * (fp * fp + f * fpp);
                Ok(MetricJet {
                    sigma,
                    d_sigma: vec![dr, zero.clone()],
                    dd_sigma: vec![vec![drr, zero.clone()], vec![zero.clone(), zero]],
                })
            }
        }
    }

    pub fn sigma(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.jet(x)?.sigma)
    }

    /// `√det σ` and the diagonal of `σ^{-1}` at a 2-D chart point. Every
    /// built-in chart is diagonal, which the discretization relies on. At the
    /// polar origin this returns `(0, [1, ∞])` instead of failing.
    pub fn diagonal_2d(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        match self.warp() {
            None => (1.0, [1.0, 1.0]),
            Some(warp) => {
                let (f, _, _) = warp.eval(x[0]);
                if f <= 0.0 {
                    (0.0, [1.0, f64::INFINITY])
                } else {
                    (f, [1.0, 1.0 / (f * f)])
                }
            }
        }
    }

    /// `Γ^k_ij = ½ σ^{kl}(∂_i σ_jl + ∂_j σ_il − ∂_l σ_ij)`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        let jet = self.jet(x)?;
        Ok(christoffel_from_jet(&jet))
    }

    /// Ricci tensor `Ric_ij` from Γ and its analytic first derivatives.
    pub fn ricci_tensor(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let jet = self.jet(x)?;
        Ok(ricci_from_jet(&jet))
    }

    /// `Ric^M(v, v)` for a σ-unit vector `v`.
    pub fn ricci_quadratic(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let jet = self.jet(x)?;
        if v.len() != self.dim {
            return Err(Error::Contract(format!(
                "vector has {} components, metric has dimension {}",
                v.len(),
                self.dim
            )));
        }
        let v = DVector::from_column_slice(v);
        let norm_sq = (v.transpose() * &jet.sigma * &v)[(0, 0)];
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Error::Contract(format!(
                "ricci_quadratic needs a unit vector, |v|² = {norm_sq}"
            )));
        }
        let ric = ricci_from_jet(&jet);
        Ok((v.transpose() * ric * v)[(0, 0)])
    }

    /// Analytic `Δ^M r` for the distance `r` from the chart center.
    pub fn radial_laplacian(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("Δr needs r > 0, got {r}")));
        }
        let n1 = (self.dim - 1) as f64;
        Ok(match self.warp() {
            None => n1 / r,
            Some(warp) => {
                let (f, fp, _) = warp.eval(r);
                n1 * fp / f
            }
        })
    }

    /// Curvature bounds of the built-in model, computed from its constant curvature.
    pub fn curvature_bounds(&self) -> CurvatureBounds {
        let kappa = self.model_curvature();
        let ricci_lower = (self.dim as f64 - 1.0) * kappa;
        CurvatureBounds {
            k0: (-kappa).max(0.0),
            ricci_lower,
            ricci_nonnegative: ricci_lower >= 0.0,
        }
    }
}

fn christoffel_from_jet(jet: &MetricJet) -> Christoffel {
    let n = jet.sigma.nrows();
    let inv = jet
        .sigma
        .clone()
        .try_inverse()
        .expect("metric jets are positive definite at valid points");
    let mut gamma = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += inv[(k, l)]
                        * (jet.d_sigma[i][(j, l)] + jet.d_sigma[j][(i, l)] - jet.d_sigma[l][(i, j)]);
                }
                gamma.set(k, i, j, 0.5 * acc);
                gamma.set(k, j, i, 0.5 * acc);
            }
        }
    }
    gamma
}

/// `Ric_bd = ∂_a Γ^a_db − ∂_d Γ^a_ab + Γ^a_ae Γ^e_db − Γ^a_de Γ^e_ab`.
fn ricci_from_jet(jet: &MetricJet) -> DMatrix<f64> {
    let n = jet.sigma.nrows();
    let inv = jet
        .sigma
        .clone()
        .try_inverse()
        .expect("metric jets are positive definite at valid points");
    let gamma = christoffel_from_jet(jet);
    // ∂_m σ^{kl} = −σ^{ka} ∂_m σ_ab σ^{bl}
    let d_inv: Vec<DMatrix<f64>> = (0..n).map(|m| -(&inv * &jet.d_sigma[m] * &inv)).collect();
    // dgamma[m] holds ∂_m Γ^k_ij
    let dgamma: Vec<Christoffel> = (0..n)
        .map(|m| {
            let mut out = Christoffel::zeros(n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            let first = jet.d_sigma[i][(j, l)] + jet.d_sigma[j][(i, l)]
                                - jet.d_sigma[l][(i, j)];
                            let second = jet.dd_sigma[m][i][(j, l)] + jet.dd_sigma[m][j][(i, l)]
                                - jet.dd_sigma[m][l][(i, j)];
                            acc += d_inv[m][(k, l)] * first + inv[(k, l)] * second;
                        }
                        out.set(k, i, j, 0.5 * acc);
                    }
                }
            }
            out
        })
        .collect();
    let mut ric = DMatrix::zeros(n, n);
    for b in 0..n {
        for d in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                acc += dgamma[a].get(a, d, b) - dgamma[d].get(a, a, b);
                for e in 0..n {
                    acc += gamma.get(a, a, e) * gamma.get(e, d, b)
                        - gamma.get(a, d, e) * gamma.get(e, a, b);
                }
            }
            ric[(b, d)] = acc;
        }
    }
    ric
}

/// Curvature data consumed by the barrier and the gradient estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureBounds {
    /// Sectional curvatures satisfy `K_π ≥ −k0`.
    pub k0: f64,
    /// `Ric^M(v, v) ≥ ricci_lower` for unit `v`.
    pub ricci_lower: f64,
    pub ricci_nonnegative: bool,
}

impl CurvatureBounds {
    pub fn new(k0: f64, ricci_lower: f64, ricci_nonnegative: bool) -> Result<Self> {
        if !(k0 >= 0.0) || !k0.is_finite() {
            return Err(Error::Domain(format!("K0 must be finite and >= 0, got {k0}")));
        }
        if !ricci_lower.is_finite() {
            return Err(Error::Domain("ricci lower bound must be finite".into()));
        }
        if ricci_nonnegative && ricci_lower < 0.0 {
            return Err(Error::Contract(
                "ricci_nonnegative requires ricci_lower >= 0".into(),
            ));
        }
        Ok(Self {
            k0,
            ricci_lower,
            ricci_nonnegative,
        })
    }

    /// Checks the stored bounds against pointwise curvature at the given 2-D
    /// chart points: the smallest Ricci eigenvalue (w.r.t. σ) must not drop
    /// below `ricci_lower`. Returns the worst slack.
    pub fn validate_against(&self, metric: &ChartMetric, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for x in points {
            let jet = metric.jet(x)?;
            let ric = ricci_from_jet(&jet);
            // Generalized eigenvalues of (Ric, σ) via σ^{-1/2} Ric σ^{-1/2}.
            let chol = jet
                .sigma
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Geometry(format!("metric not positive definite at {x:?}")))?;
            let l_inv = chol
                .l()
                .try_inverse()
                .ok_or_else(|| Error::Geometry("singular Cholesky factor".into()))?;
            let sym = &l_inv * ric * l_inv.transpose();
            let sym = (&sym + sym.transpose()) * 0.5;
            let min_eig = sym.symmetric_eigenvalues().min();
            worst = worst.min(min_eig - self.ricci_lower);
        }
        Ok(worst)
    }
}

/// Upper bound for `Δ^M r` at distance `r` when `K_π ≥ −K0`: the Laplacian of
/// the distance in the model space of curvature `−K0`.
pub fn radial_laplacian_bound(n: usize, k0: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radial_laplacian_bound needs r > 0, got {r}")));
    }
    if !(k0 >= 0.0) {
        return Err(Error::Domain(format!("K0 must be >= 0, got {k0}")));
    }
    let n1 = n as f64 - 1.0;
    if k0 == 0.0 {
        return Ok(n1 / r);
    }
    let s = k0.sqrt();
    Ok(n1 * s / (s * r).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hyperbolic() -> ChartMetric {
        ChartMetric::hyperbolic_polar(2, -1.0, 0.1, 5.0).unwrap()
    }

    /// Christoffel symbols from central differences of σ, independent of the
    /// analytic derivative path.
    fn fd_christoffel(metric: &ChartMetric, x: &[f64], h: f64) -> Christoffel {
        let n = metric.dim();
        let sigma = metric.sigma(x).unwrap();
        let inv = sigma.try_inverse().unwrap();
        let d: Vec<DMatrix<f64>> = (0..n)
            .map(|k| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (metric.sigma(&xp).unwrap() - metric.sigma(&xm).unwrap()) / (2.0 * h)
            })
            .collect();
        let mut g = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += inv[(k, l)] * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
                    }
                    g.set(k, i, j, 0.5 * acc);
                }
            }
        }
        g
    }

    #[test]
    fn euclidean_christoffel_vanishes() {
        let m = ChartMetric::euclidean(2, vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = m.christoffel(&[0.3, -0.2]).unwrap();
        assert!(g.data.iter().all(|v| *v == 0.0));
        assert_eq!(m.sigma(&[0.0, 0.0]).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn flat_polar_christoffel() {
        let m = ChartMetric::flat_polar(0.5, 3.0).unwrap();
        let r = 1.7;
        let g = m.christoffel(&[r, 0.4]).unwrap();
        assert_abs_diff_eq!(g.get(0, 1, 1), -r, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 0, 1), 1.0 / r, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1, 0), 1.0 / r, epsilon = 1e-14);
        for (k, i, j) in [(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 1, 1)] {
            assert_eq!(g.get(k, i, j), 0.0);
        }
        let fd = fd_christoffel(&m, &[r, 0.4], 1e-4);
        for (a, b) in g.data.iter().zip(&fd.data) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }

    #[test]
    fn hyperbolic_christoffel_matches_closed_form_and_fd() {
        let m = hyperbolic();
        let r: f64 = 1.3;
        let g = m.christoffel(&[r, 2.0]).unwrap();
        assert_abs_diff_eq!(g.get(0, 1, 1), -r.sinh() * r.cosh(), epsilon = 1e-13);
        assert_abs_diff_eq!(g.get(1, 0, 1), 1.0 / r.tanh(), epsilon = 1e-13);
        // O(h²) agreement with finite-differenced σ
        let e1: f64 = fd_christoffel(&m, &[r, 2.0], 1e-2)
            .data
            .iter()
            .zip(&g.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let e2: f64 = fd_christoffel(&m, &[r, 2.0], 5e-3)
            .data
            .iter()
            .zip(&g.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn christoffel_outside_domain_fails() {
        let m = hyperbolic();
        assert!(matches!(m.christoffel(&[6.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(m.christoffel(&[0.0, 0.0]), Err(Error::Domain(_))));
        let e = ChartMetric::euclidean(2, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(e.christoffel(&[1.5, 0.5]).is_err());
    }

    #[test]
    fn ricci_of_constant_curvature_models() {
        let e = ChartMetric::euclidean(3, vec![-1.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(e.ricci_quadratic(&[0.1, 0.2, 0.3], &[0.0, 0.6, 0.8]).unwrap(), 0.0);

        let flat = ChartMetric::flat_polar(0.5, 3.0).unwrap();
        assert_abs_diff_eq!(flat.ricci_quadratic(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0, epsilon = 1e-14);

        let h = hyperbolic();
        let mut values = Vec::new();
        for &r in &[0.2, 1.0, 2.5, 4.9] {
            let f: f64 = f64::sinh(r);
            for &phi in &[0.0f64, 0.7, 1.5, 3.0] {
                let v = [phi.cos(), phi.sin() / f];
                values.push(h.ricci_quadratic(&[r, 1.0], &v).unwrap());
            }
        }
        for v in values {
            assert_abs_diff_eq!(v, -1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn ricci_rejects_non_unit_vector() {
        let h = hyperbolic();
        assert!(matches!(h.ricci_quadratic(&[1.0, 0.0], &[2.0, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn radial_laplacian_bound_values() {
        assert_abs_diff_eq!(radial_laplacian_bound(2, 0.0, 2.0).unwrap(), 0.5);
        assert_abs_diff_eq!(radial_laplacian_bound(3, 1.0, 40.0).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            radial_laplacian_bound(2, 1.0, 1.0).unwrap(),
            1.0 / 1f64.tanh(),
            epsilon = 1e-15
        );
        assert!(radial_laplacian_bound(2, 1.0, 0.0).is_err());
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let r = 0.05 * i as f64;
            let b = radial_laplacian_bound(4, 0.7, r).unwrap();
            assert!(b < prev && b >= 3.0 / r);
            prev = b;
        }
    }

    #[test]
    fn stored_bounds_match_models() {
        let e = ChartMetric::euclidean(2, vec![0.0; 2], vec![1.0; 2]).unwrap();
        let b = e.curvature_bounds();
        assert_eq!((b.k0, b.ricci_lower, b.ricci_nonnegative), (0.0, 0.0, true));
        let h = hyperbolic().curvature_bounds();
        assert_eq!((h.k0, h.ricci_lower, h.ricci_nonnegative), (1.0, -1.0, false));
        let h3 = ChartMetric::hyperbolic_polar(3, -1.0, 0.1, 5.0).unwrap().curvature_bounds();
        assert_eq!(h3.ricci_lower, -2.0);
        let pts: Vec<Vec<f64>> = (1..20).map(|i| vec![0.25 * i as f64, 0.3 * i as f64]).collect();
        let slack = h.validate_against(&hyperbolic(), &pts).unwrap();
        assert!(slack.abs() < 1e-8);
        assert!(CurvatureBounds::new(0.0, -1.0, true).is_err());
    }

    #[test]
    fn radial_laplacian_of_models() {
        let h = ChartMetric::hyperbolic_polar(3, -1.0, 0.0, 5.0).unwrap();
        assert_abs_diff_eq!(h.radial_laplacian(1.0).unwrap(), 2.0 / 1f64.tanh(), epsilon = 1e-14);
        let f = ChartMetric::flat_polar(0.0, 5.0).unwrap();
        assert_abs_diff_eq!(f.radial_laplacian(2.0).unwrap(), 0.5);
    }

    #[test]
    fn metric_is_positive_definite_on_grid() {
        for m in [
            hyperbolic(),
            ChartMetric::rotationally_symmetric(2, Warp::Spherical { kappa: 1.0 }, 0.1, 1.5).unwrap(),
        ] {
            for i in 0..50 {
                let r = 0.1 + i as f64 * 0.028;
                let s = m.sigma(&[r, 0.0]).unwrap();
                assert!(s.symmetric_eigenvalues().min() > 0.0);
            }
        }
    }
}
