//! Gradient estimates evaluated on solved graphs: the maximum-principle bound
//! for `W`, the interior bound at the center of a geodesic ball, and the
//! Harnack ratio behind the entire-graph rigidity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::gradient_lift_field;
use crate::mesh::{Mesh, ScalarField};
use crate::metric::{ChartMetric, CurvatureBounds, Warp};
use crate::solver::{continuation_solve, DirichletProblem, SolverConfig};

/// `Ψ(R) = (n−1)√K₀ R coth(√K₀ R) + 1`, equal to `n` when `K₀ = 0`.
pub fn psi(radius: f64, n: usize, k0: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("Ψ needs R > 0, got {radius}")));
    }
    if !(k0 >= 0.0) {
        return Err(Error::Domain(format!("K0 must be >= 0, got {k0}")));
    }
    let x = k0.sqrt() * radius;
    let x_coth_x = if x == 0.0 { 1.0 } else { x / x.tanh() };
    Ok((n as f64 - 1.0) * x_coth_x + 1.0)
}

/// `α = √max(−ricci_lower, 0)`.
pub fn alpha_from_bounds(bounds: &CurvatureBounds) -> f64 {
    (-bounds.ricci_lower).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma31Check {
    /// `sup W` over the closed domain.
    pub lhs: f64,
    /// `sup e^{−αu} · sup_∂ (e^{αu} W)`.
    pub rhs: f64,
    pub slack: f64,
    pub alpha: f64,
}

/// Maximum-principle bound for `W` with boundary `W` from one-sided stencils.
pub fn lemma31_check(u: &ScalarField, metric: &ChartMetric, bounds: &CurvatureBounds) -> Result<Lemma31Check> {
    let w = gradient_lift_field(metric, u)?;
    let alpha = alpha_from_bounds(bounds);
    let mesh = u.mesh();
    let lhs = w.max();
    let sup_decay = u.values().iter().map(|v| (-alpha * v).exp()).fold(0.0, f64::max);
    let sup_boundary = (0..mesh.num_nodes())
        .filter(|k| mesh.is_boundary(*k))
        .map(|k| (alpha * u.values()[k]).exp() * w.values()[k])
        .fold(0.0, f64::max);
    let rhs = sup_decay * sup_boundary;
    Ok(Lemma31Check {
        lhs,
        rhs,
        slack: rhs - lhs,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm41Check {
    pub w_p: f64,
    pub bound: f64,
    pub slack: f64,
    pub k: f64,
    pub psi: f64,
    pub u_p: f64,
    pub radius: f64,
    /// `bound / W(p)`, recorded to study how tight the estimate is.
    pub tightness: f64,
}

/// `K = 64 u(p)² Ψ(R)/R² + 2`.
pub fn thm41_k(u_p: f64, psi: f64, radius: f64) -> f64 {
    64.0 * u_p * u_p * psi / (radius * radius) + 2.0
}

/// `((e^K − 1)/(e^{K/2} − 1)) · max{2/√3, 16u(p)/R}`; the ratio equals `e^{K/2} + 1`.
pub fn thm41_bound(u_p: f64, k: f64, radius: f64) -> f64 {
    ((0.5 * k).exp() + 1.0) * (2.0 / 3f64.sqrt()).max(16.0 * u_p / radius)
}

/// Interior gradient bound at the center `p` of a polar disk `B_R(p)`; `u`
/// must be nonnegative.
pub fn thm41_check(u: &ScalarField, metric: &ChartMetric, bounds: &CurvatureBounds) -> Result<Thm41Check> {
    let Mesh::PolarDisk { radius, .. } = *u.mesh() else {
        return Err(Error::Contract("the interior estimate is evaluated at the center of a polar disk".into()));
    };
    if u.min() < 0.0 {
        return Err(Error::Contract(format!("the estimate needs u >= 0, min u = {}", u.min())));
    }
    let w = gradient_lift_field(metric, u)?;
    let w_p = w.values()[0];
    let u_p = u.values()[0];
    let psi = psi(radius, metric.dim(), bounds.k0)?;
    let k = thm41_k(u_p, psi, radius);
    let bound = thm41_bound(u_p, k, radius);
    Ok(Thm41Check {
        w_p,
        bound,
        slack: bound - w_p,
        k,
        psi,
        u_p,
        radius,
        tightness: bound / w_p,
    })
}

/// `sup u / inf u` over the nodes of a polar disk with `r ≤ R/2`.
pub fn harnack_ratio(u: &ScalarField) -> Result<f64> {
    let mesh = u.mesh();
    let Mesh::PolarDisk { radius, .. } = *mesh else {
        return Err(Error::Contract("the Harnack ratio is taken on the half ball of a polar disk".into()));
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, v) in u.values().iter().enumerate() {
        if mesh.node_coords(k)[0] <= 0.5 * radius + 1e-12 * radius {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Contract(format!("the Harnack ratio needs u > 0, inf = {lo}")));
    }
    Ok(hi / lo)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidityRow {
    pub radius: f64,
    pub epsilon: f64,
    pub inf_u: f64,
    pub sup_u: f64,
    /// `sup u / ε`.
    pub c: f64,
    pub harnack: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigidityReport {
    pub amplitude: f64,
    pub rows: Vec<RigidityRow>,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    (hi - lo) / lo
}

impl RigidityReport {
    /// `(max − min)/min` of the Harnack ratios.
    pub fn harnack_variation(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.harnack))
    }

    /// `(max − min)/min` of `C = sup u/ε`.
    pub fn c_variation(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.c))
    }
}

/// Disk sizes and resolution for [`rigidity_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RigiditySetup {
    pub warp: Warp,
    pub radii: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Oscillation `A` of the data `ε(1 + A(1 + cos θ))`.
    pub amplitude: f64,
    pub nr: usize,
    pub ntheta: usize,
}

/// Solves disks `B_R` with boundary data `ε(1 + A(1 + cos θ))`, whose infimum
/// is `ε`, and records `sup u/ε` and the half-ball Harnack ratio.
pub fn rigidity_experiment(setup: &RigiditySetup, config: &SolverConfig) -> Result<RigidityReport> {
    if setup.warp.curvature() < 0.0 {
        return Err(Error::Contract("rigidity runs on flat or positively curved models".into()));
    }
    if !(setup.amplitude >= 0.0) || setup.epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain("epsilons must be positive and the amplitude nonnegative".into()));
    }
    let cases: Vec<(f64, f64)> = setup
        .radii
        .iter()
        .flat_map(|r| setup.epsilons.iter().map(move |e| (*r, *e)))
        .collect();
    let rows = cases
        .par_iter()
        .map(|&(radius, eps)| {
            let metric = ChartMetric::rotationally_symmetric(2, setup.warp, 0.0, radius)?;
            let mesh = Mesh::PolarDisk {
                radius,
                nr: setup.nr,
                ntheta: setup.ntheta,
            };
            let a = setup.amplitude;
            let problem = DirichletProblem::new(metric, mesh, |x| eps * (1.0 + a * (1.0 + x[1].cos())), false)?;
            let out = continuation_solve(&problem, config)?;
            let u = &out.solution.u;
            Ok(RigidityRow {
                radius,
                epsilon: eps,
                inf_u: u.min(),
                sup_u: u.max(),
                c: u.max() / eps,
                harnack: harnack_ratio(u)?,
                converged: out.failed_step.is_none(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RigidityReport {
        amplitude: setup.amplitude,
        rows,
    })
}

/// Combined report for one solved problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub lemma31: Lemma31Check,
    pub thm41: Option<Thm41Check>,
    pub harnack_ratio: Option<f64>,
}

impl EstimateReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.lemma31.slack >= -tol && self.thm41.is_none_or(|t| t.slack > 0.0)
    }
}

/// The boundary-controlled W bound on any solution, plus the interior bound and the Harnack ratio
/// when the mesh is a disk and `u` has the required sign.
pub fn evaluate(u: &ScalarField, metric: &ChartMetric, bounds: &CurvatureBounds) -> Result<EstimateReport> {
    let lemma31 = lemma31_check(u, metric, bounds)?;
    let disk = matches!(u.mesh(), Mesh::PolarDisk { .. });
    let thm41 = if disk && u.min() >= 0.0 {
        Some(thm41_check(u, metric, bounds)?)
    } else {
        None
    };
    let harnack_ratio = if disk && u.min() > 0.0 {
        Some(harnack_ratio(u)?)
    } else {
        None
    };
    Ok(EstimateReport {
        lemma31,
        thm41,
        harnack_ratio,
    })
}
