//! Dirichlet problems for the minimal surface equation: damped Newton on the
//! discrete area functional, continuation in the boundary amplitude, and the
//! expanding-annulus family.

use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;

use crate::discrete::AreaLayout;
use crate::error::{Error, Result};
use crate::geometry::gradient_lift_field;
use crate::mesh::{Mesh, ScalarField};
use crate::metric::ChartMetric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target for the sup norm of the discrete residual.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Step reduction per backtracking trial.
    pub backtrack_factor: f64,
    /// Smallest step length tried before giving up.
    pub min_step: f64,
    pub continuation_steps: usize,
    /// Relative residual target for the linear solves (iterative refinement).
    pub linear_solver_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton_iters: 50,
            backtrack_factor: 0.5,
            min_step: 2f64.powi(-20),
            continuation_steps: 10,
            linear_solver_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.newton_tol, self.min_step, self.linear_solver_tol];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Contract("solver tolerances must be positive".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::Contract(format!(
                "backtracking factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if self.max_newton_iters == 0 || self.continuation_steps == 0 {
            return Err(Error::Contract("iteration and continuation counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Minimal graph problem with Dirichlet data on the mesh boundary.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub metric: ChartMetric,
    pub mesh: Mesh,
    /// Boundary data, stored as a full field; interior values are ignored.
    pub boundary: ScalarField,
    /// Solve the rotationally symmetric reduction in `r` only.
    pub radial: bool,
}

impl DirichletProblem {
    pub fn new(metric: ChartMetric, mesh: Mesh, data: impl Fn([f64; 2]) -> f64, radial: bool) -> Result<Self> {
        let boundary = ScalarField::from_fn(mesh, data)?;
        Self::from_field(metric, boundary, radial)
    }

    pub fn from_field(metric: ChartMetric, boundary: ScalarField, radial: bool) -> Result<Self> {
        let mesh = *boundary.mesh();
        mesh.check_compatible(&metric)?;
        let problem = Self {
            metric,
            mesh,
            boundary,
            radial,
        };
        if radial {
            if problem.metric.warp().is_none() || !mesh.is_polar() {
                return Err(Error::Contract(
                    "the radial reduction needs a rotationally symmetric metric on a polar mesh".into(),
                ));
            }
            let (n1, n2) = mesh.shape();
            for i in [0, n1 - 1] {
                if matches!(mesh, Mesh::PolarDisk { .. }) && i == 0 {
                    continue;
                }
                let v0 = problem.boundary.at(i, 0);
                if (0..n2).any(|j| (problem.boundary.at(i, j) - v0).abs() > 1e-14 * (1.0 + v0.abs())) {
                    return Err(Error::Contract(
                        "radial reduction needs boundary data constant on each boundary circle".into(),
                    ));
                }
            }
        }
        Ok(problem)
    }

    /// Same problem with the boundary data multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let values = self.boundary.values().iter().map(|v| s * v).collect();
        Ok(Self {
            boundary: ScalarField::new(self.mesh, values)?,
            ..self.clone()
        })
    }

    pub fn layout(&self) -> Result<AreaLayout> {
        if self.radial {
            AreaLayout::radial(&self.metric, &self.mesh)
        } else {
            AreaLayout::planar(&self.metric, &self.mesh)
        }
    }

    /// Unknown vector of the (possibly reduced) system.
    fn reduce(&self, u: &ScalarField) -> Vec<f64> {
        if self.radial {
            let (n1, _) = self.mesh.shape();
            (0..n1).map(|i| u.at(i, 0)).collect()
        } else {
            u.values().to_vec()
        }
    }

    fn expand(&self, v: &[f64]) -> Result<ScalarField> {
        if self.radial {
            let mesh = self.mesh;
            let values = (0..mesh.num_nodes()).map(|k| v[mesh.logical(k).0]).collect();
            ScalarField::new(mesh, values)
        } else {
            ScalarField::new(self.mesh, v.to_vec())
        }
    }

    /// Initial guess: boundary data, interior filled with the boundary midrange.
    pub fn initial_guess(&self) -> Result<ScalarField> {
        let mask = self.mesh.boundary_mask();
        let b = self.boundary.values();
        let (lo, hi) = self.boundary_range();
        let mean = lo + 0.5 * (hi - lo);
        let values = b.iter().zip(&mask).map(|(v, m)| if *m { *v } else { mean }).collect();
        ScalarField::new(self.mesh, values)
    }

    /// Largest and smallest boundary values.
    pub fn boundary_range(&self) -> (f64, f64) {
        let mask = self.mesh.boundary_mask();
        self.boundary
            .values()
            .iter()
            .zip(&mask)
            .filter(|(_, m)| **m)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    /// Iteration cap reached.
    MaxIterations,
    /// Backtracking fell below the minimum step.
    StepFloor,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: ScalarField,
    pub status: SolveStatus,
    pub residual_norm: f64,
    pub newton_iterations_per_step: Vec<usize>,
    /// Residual sup norm before each Newton step and after the last.
    pub residual_history: Vec<f64>,
    /// `sup |∇^M u|` over all nodes.
    pub gradient_sup: f64,
    pub min_u: f64,
    pub max_u: f64,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    fn build(
        problem: &DirichletProblem,
        u: ScalarField,
        status: SolveStatus,
        history: Vec<f64>,
        iterations: Vec<usize>,
    ) -> Result<Self> {
        let w = gradient_lift_field(&problem.metric, &u)?;
        let gradient_sup = w.values().iter().map(|w| (w * w - 1.0).max(0.0).sqrt()).fold(0.0, f64::max);
        Ok(Self {
            min_u: u.min(),
            max_u: u.max(),
            residual_norm: *history.last().expect("history is never empty"),
            u,
            status,
            newton_iterations_per_step: iterations,
            residual_history: history,
            gradient_sup,
        })
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Discrete residual `(1/√σ) ∂_i(√σ σ^{ij} u_j / W)` at every node of the 2-D
/// mesh, zero on the boundary.
pub fn assemble_residual(problem: &DirichletProblem, u: &ScalarField) -> Result<Vec<f64>> {
    if u.mesh() != &problem.mesh {
        return Err(Error::Contract("field mesh differs from the problem mesh".into()));
    }
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite height value".into()));
    }
    Ok(AreaLayout::planar(&problem.metric, &problem.mesh)?.residual(u.values()))
}

struct NewtonOutcome {
    u: Vec<f64>,
    status: SolveStatus,
    history: Vec<f64>,
    iterations: usize,
}

fn solve_linear(h: &CscMatrix<f64>, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let chol = CscCholesky::factor(h)
        .map_err(|e| Error::LinearAlgebra(format!("Cholesky factorization of the Jacobian failed: {e:?}")))?;
    let b = DVector::from_column_slice(rhs);
    let mut x = chol.solve(&b);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    // A few rounds of iterative refinement toward the relative tolerance.
    for _ in 0..3 {
        let r = &b - h * &x;
        if r.norm() <= tol * bnorm {
            break;
        }
        x += chol.solve(&r);
    }
    let out: Vec<f64> = x.iter().copied().collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearAlgebra("Newton step is not finite".into()));
    }
    Ok(out)
}

fn newton_core(layout: &AreaLayout, mut u: Vec<f64>, config: &SolverConfig) -> Result<NewtonOutcome> {
    let merit = |r: &[f64]| -> f64 { r.iter().zip(&layout.volumes).map(|(r, v)| v * r * r).sum::<f64>().sqrt() };
    let mut res = layout.residual(&u);
    let mut history = vec![sup_norm(&res)];
    for it in 0..config.max_newton_iters {
        if sup_norm(&res) <= config.newton_tol {
            return Ok(NewtonOutcome {
                u,
                status: SolveStatus::Converged,
                history,
                iterations: it,
            });
        }
        let h = layout.hessian(&u);
        // −∂A/∂u on interior rows; the residual is −g/V.
        let rhs: Vec<f64> = res.iter().zip(&layout.volumes).map(|(r, v)| r * v).collect();
        let step = solve_linear(&h, &rhs, config.linear_solver_tol)?;
        let m0 = merit(&res);
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let r_trial = layout.residual(&trial);
            if merit(&r_trial) <= (1.0 - 1e-4 * lambda) * m0 {
                u = trial;
                res = r_trial;
                break;
            }
            lambda *= config.backtrack_factor;
            if lambda < config.min_step {
                return Ok(NewtonOutcome {
                    u,
                    status: SolveStatus::StepFloor,
                    history,
                    iterations: it + 1,
                });
            }
        }
        history.push(sup_norm(&res));
    }
    let status = if sup_norm(&res) <= config.newton_tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    Ok(NewtonOutcome {
        u,
        status,
        history,
        iterations: config.max_newton_iters,
    })
}

/// Damped Newton from `u_init`, which must carry the problem's boundary data.
/// Nonconvergence is reported through [`Solution::status`] with the last
/// iterate.
pub fn newton_solve(problem: &DirichletProblem, u_init: &ScalarField, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    if u_init.mesh() != &problem.mesh {
        return Err(Error::Contract("initial guess lives on a different mesh".into()));
    }
    let mask = problem.mesh.boundary_mask();
    for (k, m) in mask.iter().enumerate() {
        let (a, b) = (u_init.values()[k], problem.boundary.values()[k]);
        if *m && (a - b).abs() > 1e-12 * (1.0 + b.abs()) {
            return Err(Error::Contract(format!(
                "initial guess violates the boundary data at node {k}: {a} vs {b}"
            )));
        }
    }
    let layout = problem.layout()?;
    let out = newton_core(&layout, problem.reduce(u_init), config)?;
    let u = problem.expand(&out.u)?;
    Solution::build(problem, u, out.status, out.history, vec![out.iterations])
}

/// One continuation step in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Fraction `k/steps` of the target boundary data.
    pub amplitude: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    pub gradient_sup: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    /// Final solution (the last attempted step if one failed).
    pub solution: Solution,
    pub trace: Vec<StepRecord>,
    /// 1-based index of the step that failed to converge.
    pub failed_step: Option<usize>,
}

/// Solves the problems with boundary data `(k/steps)·g`, `k = 1..=steps`,
/// warm-starting each from the previous solution.
pub fn continuation_solve(problem: &DirichletProblem, config: &SolverConfig) -> Result<ContinuationResult> {
    config.validate()?;
    let zero = ScalarField::constant(problem.mesh, 0.0)?;
    let (lo, hi) = problem.boundary_range();
    if lo == 0.0 && hi == 0.0 {
        let solution = Solution::build(problem, zero, SolveStatus::Converged, vec![0.0], vec![])?;
        return Ok(ContinuationResult {
            solution,
            trace: vec![],
            failed_step: None,
        });
    }
    let layout = problem.layout()?;
    let mask = problem.mesh.boundary_mask();
    let steps = config.continuation_steps;
    let mut current = problem.scaled(0.0)?.initial_guess()?;
    let mut trace = Vec::with_capacity(steps);
    let mut iterations = Vec::with_capacity(steps);
    let mut history = Vec::new();
    for k in 1..=steps {
        let s = k as f64 / steps as f64;
        let step_problem = problem.scaled(s)?;
        let mut init = current.clone();
        for (idx, m) in mask.iter().enumerate() {
            if *m {
                init.values_mut()[idx] = step_problem.boundary.values()[idx];
            }
        }
        let out = newton_core(&layout, step_problem.reduce(&init), config)?;
        let u = problem.expand(&out.u)?;
        history.extend_from_slice(&out.history);
        iterations.push(out.iterations);
        let sol = Solution::build(&step_problem, u, out.status, out.history, vec![out.iterations])?;
        trace.push(StepRecord {
            amplitude: s,
            iterations: out.iterations,
            residual_norm: sol.residual_norm,
            gradient_sup: sol.gradient_sup,
            status: sol.status,
        });
        let failed = !sol.converged();
        current = sol.u.clone();
        if failed || k == steps {
            let solution = Solution {
                newton_iterations_per_step: iterations,
                residual_history: history,
                ..sol
            };
            return Ok(ContinuationResult {
                solution,
                trace,
                failed_step: failed.then_some(k),
            });
        }
    }
    unreachable!("continuation returns on its last step")
}

/// `min(min u − min ∂, max ∂ − max u)`; nonnegative when the discrete maximum
/// principle holds.
pub fn maximum_principle_check(solution: &Solution) -> f64 {
    let mesh = solution.u.mesh();
    let (mut blo, mut bhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, v) in solution.u.values().iter().enumerate() {
        if mesh.is_boundary(k) {
            blo = blo.min(*v);
            bhi = bhi.max(*v);
        }
    }
    (solution.min_u - blo).min(bhi - solution.max_u)
}

#[derive(Debug, Clone)]
pub struct FamilyEntry {
    pub outer_radius: f64,
    /// `u_k(2r₁)`.
    pub u_at_2r1: f64,
    pub gradient_sup: f64,
    pub iterations: Vec<usize>,
    pub residual_norm: f64,
    pub converged: bool,
    /// Ring values `u(r₁ + i h)`.
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub r1: f64,
    pub t: f64,
    pub h: f64,
    pub entries: Vec<FamilyEntry>,
    /// `max (u_{k+1} − u_k)` over common rings; `≤ 0` when the graphs decrease.
    pub ordering_violation: f64,
}

impl FamilyReport {
    pub fn values_at_2r1(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.u_at_2r1).collect()
    }
}

/// Solves the annuli `r₁ ≤ r ≤ R_k` with data `0` inside and `t` outside
/// using the radial reduction with common ring spacing `h`. The radii are
/// independent problems and run in parallel.
pub fn annulus_family(
    metric: &ChartMetric,
    r1: f64,
    outer_radii: &[f64],
    t: f64,
    delta0: f64,
    h: f64,
    config: &SolverConfig,
) -> Result<FamilyReport> {
    if !(t >= 0.0) {
        return Err(Error::Contract(format!("amplitude must be nonnegative, got {t}")));
    }
    if t > delta0 {
        return Err(Error::Contract(format!("amplitude {t} exceeds the barrier height δ0 = {delta0}")));
    }
    if !(r1 > 0.0 && h > 0.0) {
        return Err(Error::Domain("inner radius and spacing must be positive".into()));
    }
    let steps_of = |len: f64| -> Result<usize> {
        let m = len / h;
        if (m - m.round()).abs() > 1e-9 * m.max(1.0) {
            return Err(Error::Domain(format!("length {len} is not a multiple of h = {h}")));
        }
        Ok(m.round() as usize)
    };
    let inner_steps = steps_of(r1)?;
    if outer_radii.windows(2).any(|w| !(w[0] < w[1])) || outer_radii.first().is_some_and(|r| *r <= 2.0 * r1) {
        return Err(Error::Domain("outer radii must increase and exceed 2r1".into()));
    }
    let entries = outer_radii
        .par_iter()
        .map(|&big_r| {
            let nr = steps_of(big_r - r1)? + 1;
            let mesh = Mesh::PolarAnnulus {
                r: [r1, big_r],
                nr,
                ntheta: crate::mesh::MIN_INTERIOR_NODES + 3,
            };
            let problem = DirichletProblem::new(metric.clone(), mesh, |x| if x[0] > r1 + 0.5 * h { t } else { 0.0 }, true)?;
            let out = continuation_solve(&problem, config)?;
            let sol = out.solution;
            let profile: Vec<f64> = (0..nr).map(|i| sol.u.at(i, 0)).collect();
            Ok(FamilyEntry {
                outer_radius: big_r,
                u_at_2r1: profile[inner_steps],
                gradient_sup: sol.gradient_sup,
                iterations: sol.newton_iterations_per_step.clone(),
                residual_norm: sol.residual_norm,
                converged: out.failed_step.is_none(),
                profile,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ordering_violation = entries
        .windows(2)
        .flat_map(|w| w[0].profile.iter().zip(&w[1].profile).map(|(a, b)| b - a))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FamilyReport {
        r1,
        t,
        h,
        entries,
        ordering_violation,
    })
}
