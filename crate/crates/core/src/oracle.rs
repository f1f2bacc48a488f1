//! Independent checks of the Newton solver: direct minimization of the
//! discrete area, a dual-number first variation, 1-D shooting for rotationally
//! symmetric data, and the agreement of divergence and non-divergence forms.

use num_dual::{Dual64, DualNum};
use quadrature::double_exponential;

use crate::discrete::AreaLayout;
use crate::error::{Error, Result};
use crate::geometry::compute_quantities;
use crate::mesh::ScalarField;
use crate::metric::{ChartMetric, Warp};
use crate::solver::DirichletProblem;
use crate::stencil::StencilKind;

/// Area functional of a Dirichlet problem, evaluated for any number type.
#[derive(Debug, Clone)]
pub struct AreaFunctional {
    pub problem: DirichletProblem,
    layout: AreaLayout,
}

impl AreaFunctional {
    pub fn new(problem: &DirichletProblem) -> Result<Self> {
        Ok(Self {
            layout: problem.layout()?,
            problem: problem.clone(),
        })
    }

    pub fn layout(&self) -> &AreaLayout {
        &self.layout
    }

    fn eval<D: DualNum<Primitive = f64> + Copy>(&self, u: &[D]) -> D {
        let mut total = D::from(0.0);
        for t in &self.layout.terms {
            let d = |q: Option<usize>| q.map_or(D::from(0.0), |q| u[q] - u[t.p]);
            let (d1, d2) = (d(t.q1), d(t.q2));
            let w = (d1 * d1 * t.c1 + d2 * d2 * t.c2 + 1.0).sqrt();
            total += w * t.weight;
        }
        total
    }

    /// Values of the unknowns: every node, or one per ring for radial problems.
    pub fn unknowns(&self, u: &ScalarField) -> Result<Vec<f64>> {
        if u.mesh() != &self.problem.mesh {
            return Err(Error::Contract("field mesh differs from the problem mesh".into()));
        }
        Ok(if self.problem.radial {
            let (n1, _) = self.problem.mesh.shape();
            (0..n1).map(|i| u.at(i, 0)).collect()
        } else {
            u.values().to_vec()
        })
    }

    /// `Σ ω W`, the midpoint-rule area of the graph.
    pub fn discrete_area(&self, u: &ScalarField) -> Result<f64> {
        Ok(self.eval(&self.unknowns(u)?))
    }

    /// `∂A/∂u_p` at every interior unknown by forward-mode dual numbers,
    /// divided by the nodal volume and negated so it is directly comparable
    /// with the solver residual. Boundary entries are zero.
    pub fn first_variation(&self, u: &ScalarField) -> Result<Vec<f64>> {
        let base = self.unknowns(u)?;
        let mut seeded: Vec<Dual64> = base.iter().map(|v| Dual64::new(*v, 0.0)).collect();
        let mut out = vec![0.0; base.len()];
        for k in 0..base.len() {
            if self.layout.boundary[k] {
                continue;
            }
            seeded[k].eps = 1.0;
            out[k] = -self.eval(&seeded).eps / self.layout.volumes[k];
            seeded[k].eps = 0.0;
        }
        Ok(out)
    }

    /// `A(u + λs) − A(u)` without the cancellation of subtracting two areas.
    fn area_change(&self, u: &[f64], s: &[f64], lambda: f64) -> f64 {
        let mut total = 0.0;
        for t in &self.layout.terms {
            let mut dq = 0.0;
            let mut q_old = 0.0;
            for (q, c) in [(t.q1, t.c1), (t.q2, t.c2)] {
                if let Some(q) = q {
                    let d = u[q] - u[t.p];
                    let dd = lambda * (s[q] - s[t.p]);
                    dq += c * dd * (2.0 * d + dd);
                    q_old += c * d * d;
                }
            }
            let w_old = (1.0 + q_old).sqrt();
            let w_new = (1.0 + q_old + dq).sqrt();
            total += t.weight * dq / (w_old + w_new);
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub u: ScalarField,
    pub iterations: usize,
    /// Sup norm of the volume-scaled area gradient at exit.
    pub gradient_sup: f64,
    pub area: f64,
}

/// Gradient descent on the interior values, preconditioned by the nodal
/// volumes, with an Armijo line search on the area. Stops once the scaled
/// gradient is below `tol` in the sup norm.
pub fn minimize_area(problem: &DirichletProblem, tol: f64, max_iters: usize) -> Result<DescentResult> {
    let functional = AreaFunctional::new(problem)?;
    let layout = functional.layout();
    let mut u = functional.unknowns(&problem.initial_guess()?)?;
    let mut lambda: f64 = 1.0;
    for it in 0..max_iters {
        let dir = layout.residual(&u);
        let gsup = dir.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gsup <= tol {
            let field = expand(problem, &u)?;
            return Ok(DescentResult {
                area: functional.discrete_area(&field)?,
                u: field,
                iterations: it,
                gradient_sup: gsup,
            });
        }
        // Directional derivative along dir is −Σ V r².
        let slope: f64 = dir.iter().zip(&layout.volumes).map(|(r, v)| v * r * r).sum();
        lambda = (2.0 * lambda).min(1e6);
        loop {
            if functional.area_change(&u, &dir, lambda) <= -1e-4 * lambda * slope {
                break;
            }
            lambda *= 0.5;
            if lambda < 1e-30 {
                return Err(Error::NonConvergence(format!(
                    "line search failed after {it} descent steps (scaled gradient {gsup:e})"
                )));
            }
        }
        for (a, d) in u.iter_mut().zip(&dir) {
            *a += lambda * d;
        }
    }
    Err(Error::NonConvergence(format!("area descent hit the cap of {max_iters} iterations")))
}

fn expand(problem: &DirichletProblem, v: &[f64]) -> Result<ScalarField> {
    let mesh = problem.mesh;
    if problem.radial {
        ScalarField::new(mesh, (0..mesh.num_nodes()).map(|k| v[mesh.logical(k).0]).collect())
    } else {
        ScalarField::new(mesh, v.to_vec())
    }
}

/// Rotationally symmetric minimal graph with `u(r₁) = 0`, `u(R) = t`, found by
/// shooting on the conserved flux `c = f u′/W`, i.e. `u′ = c/√(f² − c²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub warp: Warp,
    pub r1: f64,
    pub r_outer: f64,
    pub t: f64,
    pub flux: f64,
    /// `|u(R) − t|` at the accepted flux.
    pub boundary_error: f64,
}

const SHOOT_TOL: f64 = 1e-13;

fn shoot_value(warp: Warp, r1: f64, r: f64, c: f64) -> Result<f64> {
    if c == 0.0 || r == r1 {
        return Ok(0.0);
    }
    let f1 = warp.eval(r1).0;
    let len = r - r1;
    // s = r₁ + (r − r₁)v² absorbs the square-root singularity at c = f(r₁).
    let integrand = |v: f64| {
        let s = r1 + len * v * v;
        let fs = warp.eval(s).0;
        let gap = (fs - f1) + (f1 - c);
        if gap <= 0.0 {
            return 0.0;
        }
        2.0 * len * v * c / (gap * (fs + c)).sqrt()
    };
    let out = double_exponential::integrate(integrand, 0.0, 1.0, SHOOT_TOL);
    if !out.integral.is_finite() {
        return Err(Error::NonConvergence(format!("shooting quadrature diverged at r = {r}")));
    }
    Ok(out.integral)
}

impl RadialProfile {
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(r >= self.r1 && r <= self.r_outer) {
            return Err(Error::Domain(format!("r = {r} outside [{}, {}]", self.r1, self.r_outer)));
        }
        shoot_value(self.warp, self.r1, r, self.flux)
    }

    /// `u′(r) = c/√(f² − c²)`.
    pub fn slope(&self, r: f64) -> f64 {
        let f = self.warp.eval(r).0;
        self.flux / ((f - self.flux) * (f + self.flux)).sqrt()
    }

    /// `f u′/√(1 + u′²)`, which must reproduce the flux.
    pub fn flux_at(&self, r: f64) -> f64 {
        let f = self.warp.eval(r).0;
        let du = self.slope(r);
        f * du / (1.0 + du * du).sqrt()
    }
}

pub fn radial_shoot(warp: Warp, r1: f64, r_outer: f64, t: f64) -> Result<RadialProfile> {
    warp.validate()?;
    if !(r1 > 0.0 && r1 < r_outer && r_outer <= warp.radius_limit()) {
        return Err(Error::Domain(format!("need 0 < r1 < R inside the chart, got [{r1}, {r_outer}]")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("boundary height must be nonnegative, got {t}")));
    }
    let done = |flux: f64, value: f64| RadialProfile {
        warp,
        r1,
        r_outer,
        t,
        flux,
        boundary_error: (value - t).abs(),
    };
    if t == 0.0 {
        return Ok(done(0.0, 0.0));
    }
    let f1 = warp.eval(r1).0;
    let top = shoot_value(warp, r1, r_outer, f1)?;
    if t > top {
        return Err(Error::NonConvergence(format!(
            "flux range exhausted: the steepest graph over [{r1}, {r_outer}] only reaches {top}"
        )));
    }
    let (mut lo, mut hi) = (0.0, f1);
    let mut best = (f1, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = shoot_value(warp, r1, r_outer, mid)?;
        if (v - t).abs() < (best.1 - t).abs() {
            best = (mid, v);
        }
        if (v - t).abs() <= 1e-13 * t.max(1e-3) || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if v < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let profile = done(best.0, best.1);
    if profile.boundary_error > 1e-10 {
        return Err(Error::NonConvergence(format!(
            "shooting missed the boundary value by {:e}",
            profile.boundary_error
        )));
    }
    Ok(profile)
}

/// Sup over central-stencil nodes of the difference between the discrete
/// divergence-form residual and the non-divergence form `g^{ij} D_iD_j u / W`.
pub fn form_equivalence_check(metric: &ChartMetric, u: &ScalarField) -> Result<f64> {
    let layout = AreaLayout::planar(metric, u.mesh())?;
    let div = layout.residual(u.values());
    let geo = compute_quantities(metric, u)?;
    let mut worst: f64 = 0.0;
    for (k, node) in geo.nodes.iter().enumerate() {
        if let Some(g) = node {
            if g.stencil == StencilKind::Central && !u.mesh().is_boundary(k) {
                let nondiv = (g.induced_inv * g.covariant_hessian).trace() / g.w;
                worst = worst.max((div[k] - nondiv).abs());
            }
        }
    }
    Ok(worst)
}
