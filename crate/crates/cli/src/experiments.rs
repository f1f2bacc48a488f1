//! One runner per subcommand. Each returns the files to write and a JSON
//! report, or a failure that says whether the inputs or the numerics broke.

use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use minigraph::barrier::{boundary_gradient_constant, choose_r0, supersolution_check, BarrierProfile};
use minigraph::estimates::{evaluate, rigidity_experiment, EstimateReport, RigiditySetup};
use minigraph::geometry::{
    compute_quantities, det_identity_check, gradient_lift_field, inverse_identity_check, jacobi_residual,
};
use minigraph::oracle::{minimize_area, radial_shoot, AreaFunctional};
use minigraph::solver::{
    annulus_family, assemble_residual, continuation_solve, maximum_principle_check, ContinuationResult,
    DirichletProblem, Solution, SolverConfig,
};
use minigraph::{ChartMetric, Mesh, ScalarField};
use serde_json::{json, Value};

use crate::config::{Auto, Experiment, ExperimentConfig};
use crate::field_io;

/// Tolerance for the maximum-principle slack of a converged solve.
const MAX_PRINCIPLE_TOL: f64 = 1e-12;
/// Tolerance for the exact algebraic identities of the geometry report.
const IDENTITY_TOL: f64 = 1e-12;

pub struct Context {
    pub seed: u64,
    /// Directory that relative paths inside the config refer to.
    pub base: PathBuf,
    pub solution: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad or inconsistent inputs, found before any computation.
    Schema(String),
    /// A computation failed; `partial` holds what is known so far.
    Numerical { message: String, partial: Value },
}

#[derive(Debug)]
pub struct Artifacts {
    /// `(file name, contents)` pairs written into the output directory.
    pub files: Vec<(String, String)>,
    pub report: Value,
    pub passed: bool,
}

fn schema<E: ToString>(e: E) -> Failure {
    Failure::Schema(e.to_string())
}

fn numerical(e: impl ToString, partial: Value) -> Failure {
    Failure::Numerical {
        message: e.to_string(),
        partial,
    }
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, Failure> {
    cfg.outputs.validate().map_err(schema)?;
    let mut art = match cfg.experiment {
        Experiment::Solve => solve(cfg, ctx),
        Experiment::Barrier => barrier(cfg),
        Experiment::AnnulusFamily => family(cfg),
        Experiment::EstimateCheck => estimate_check(cfg, ctx),
        Experiment::OracleCompare => oracle_compare(cfg, ctx),
        Experiment::GeometryReport => geometry_report(cfg, ctx),
        Experiment::Rigidity => rigidity(cfg),
    }?;
    if let Value::Object(map) = &mut art.report {
        map.insert("experiment".into(), json!(cfg.experiment.name()));
        map.insert("passed".into(), json!(art.passed));
    }
    Ok(art)
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

fn estimates_json(e: &EstimateReport) -> Value {
    json!({
        "lemma31": {
            "lhs": e.lemma31.lhs,
            "rhs": e.lemma31.rhs,
            "slack": e.lemma31.slack,
            "alpha": e.lemma31.alpha,
        },
        "thm41": e.thm41.map(|t| json!({
            "w_p": t.w_p,
            "u_p": t.u_p,
            "radius": t.radius,
            "psi": t.psi,
            "k": t.k,
            "bound": t.bound,
            "slack": t.slack,
            "tightness": t.tightness,
        })),
        "harnack_ratio": e.harnack_ratio,
    })
}

fn solution_json(s: &Solution) -> Value {
    json!({
        "status": format!("{:?}", s.status),
        "converged": s.converged(),
        "residual_norm": s.residual_norm,
        "iterations": s.newton_iterations_per_step.iter().sum::<usize>(),
        "newton_iterations_per_step": s.newton_iterations_per_step,
        "gradient_sup": s.gradient_sup,
        "min_u": s.min_u,
        "max_u": s.max_u,
    })
}

fn trace_json(out: &ContinuationResult) -> Value {
    Value::Array(
        out.trace
            .iter()
            .map(|r| {
                json!({
                    "amplitude": r.amplitude,
                    "iterations": r.iterations,
                    "residual_norm": r.residual_norm,
                    "gradient_sup": r.gradient_sup,
                    "status": format!("{:?}", r.status),
                })
            })
            .collect(),
    )
}

/// Runs continuation and turns a failed step into a numerical failure.
fn solve_problem(problem: &DirichletProblem, solver: &SolverConfig, label: &str) -> Result<Solution, Failure> {
    let out = continuation_solve(problem, solver).map_err(|e| numerical(e, json!({ "stage": label })))?;
    if let Some(step) = out.failed_step {
        return Err(numerical(
            format!("continuation step {step} of {} did not converge", solver.continuation_steps),
            json!({
                "stage": label,
                "failed_step": step,
                "trace": trace_json(&out),
                "last_solution": solution_json(&out.solution),
            }),
        ));
    }
    Ok(out.solution)
}

fn solve(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, Failure> {
    let problem = cfg.problem(ctx.seed, &ctx.base).map_err(schema)?;
    let solver = cfg.solver().map_err(schema)?;
    let solution = solve_problem(&problem, &solver, "solve")?;
    let bounds = problem.metric.curvature_bounds();
    let partial = json!({ "solution": solution_json(&solution) });
    let est = evaluate(&solution.u, &problem.metric, &bounds).map_err(|e| numerical(e, partial.clone()))?;
    let mp = maximum_principle_check(&solution);
    let mp_ok = mp >= -MAX_PRINCIPLE_TOL;
    let est_ok = est.passed(cfg.estimates.tol);
    let report = json!({
        "solution": solution_json(&solution),
        "max_principle_slack": mp,
        "estimates": estimates_json(&est),
        "estimate_tol": cfg.estimates.tol,
        "invariants": { "max_principle": mp_ok, "estimates": est_ok },
    });
    Ok(Artifacts {
        files: vec![(cfg.outputs.data_name("solution.csv"), field_io::to_string(&solution.u))],
        report,
        passed: mp_ok && est_ok,
    })
}

fn rotational_metric(cfg: &ExperimentConfig) -> Result<ChartMetric, Failure> {
    let metric = cfg.metric().map_err(schema)?;
    if metric.warp().is_none() {
        return Err(Failure::Schema(format!(
            "metric: the {} experiment needs a rotationally symmetric polar metric",
            cfg.experiment.name()
        )));
    }
    Ok(metric)
}

fn barrier(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let spec = cfg.require(&cfg.barrier, "barrier").map_err(schema)?;
    let metric = rotational_metric(cfg)?;
    if spec.n != metric.dim() {
        return Err(Failure::Schema(format!("barrier: n = {} differs from the metric dimension {}", spec.n, metric.dim())));
    }
    if spec.samples < 2 {
        return Err(Failure::Schema("barrier: samples must be at least 2".into()));
    }
    let bounds = metric.curvature_bounds();
    let (r0, source) = match spec.r0 {
        Auto::Value(v) => (v, "given"),
        Auto::Keyword(_) => (
            choose_r0(&metric, &bounds, spec.r0_cap).map_err(|e| numerical(e, json!({ "stage": "choose_r0" })))?,
            "auto",
        ),
    };
    let partial = json!({ "r0": r0, "r0_source": source });
    let profile = BarrierProfile::new(r0, spec.n, 4.0 * r0, 2).map_err(|e| numerical(e, partial.clone()))?;
    let check = supersolution_check(&metric, &profile, spec.samples).map_err(|e| numerical(e, partial.clone()))?;
    let mut table = String::from("r,phi,phi_prime,Mw\n");
    for row in &check.samples {
        let r = row[0];
        let phi = profile.phi(r).map_err(|e| numerical(e, partial.clone()))?;
        let dphi = profile.phi_prime(r).map_err(|e| numerical(e, partial.clone()))?;
        writeln!(table, "{},{},{},{}", csv_float(r), csv_float(phi), csv_float(dphi), csv_float(row[1])).unwrap();
    }
    let report = json!({
        "n": spec.n,
        "r0": r0,
        "r0_source": source,
        "delta0": profile.delta0,
        "C2": boundary_gradient_constant(&profile),
        "min_margin": check.min_margin,
        "certified": check.certified(),
    });
    Ok(Artifacts {
        files: vec![(cfg.outputs.data_name("barrier_profile.csv"), table)],
        report,
        passed: check.certified(),
    })
}

fn family(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let spec = cfg.require(&cfg.family, "family").map_err(schema)?;
    let metric = rotational_metric(cfg)?;
    let solver = cfg.solver().map_err(schema)?;
    let warp = metric.warp().expect("checked above");
    if spec.outer_radii.is_empty() {
        return Err(Failure::Schema("family: outer_radii must not be empty".into()));
    }
    let n = metric.dim();
    let r0 = choose_r0(&metric, &metric.curvature_bounds(), spec.r0_cap)
        .map_err(|e| numerical(e, json!({ "stage": "choose_r0" })))?;
    let delta0 = BarrierProfile::new(r0, n, 4.0 * r0, 2)
        .map_err(|e| numerical(e, json!({ "stage": "barrier", "r0": r0 })))?
        .delta0;
    let t = match spec.t {
        Auto::Value(v) => v,
        Auto::Keyword(_) => delta0,
    };
    if !(t >= 0.0 && t <= delta0) {
        return Err(Failure::Schema(format!("family: t = {t} must lie in [0, δ0 = {delta0}]")));
    }
    let partial = json!({ "r0": r0, "delta0": delta0, "t": t });
    let rep = annulus_family(&metric, spec.r1, &spec.outer_radii, t, delta0, spec.h, &solver).map_err(|e| match e {
        minigraph::Error::Domain(_) | minigraph::Error::Contract(_) => schema(format!("family: {e}")),
        e => numerical(e, partial.clone()),
    })?;
    let mut oracle = Vec::with_capacity(rep.entries.len());
    for e in &rep.entries {
        let p = radial_shoot(warp, spec.r1, e.outer_radius, t).map_err(|e| numerical(e, partial.clone()))?;
        oracle.push(p.value(2.0 * spec.r1).map_err(|e| numerical(e, partial.clone()))?);
    }
    let mut table = String::from("R,ln_R,u_2r1,oracle_u_2r1,gradient_sup,newton_iterations,converged\n");
    for (e, o) in rep.entries.iter().zip(&oracle) {
        writeln!(
            table,
            "{},{},{},{},{},{},{}",
            csv_float(e.outer_radius),
            csv_float(e.outer_radius.ln()),
            csv_float(e.u_at_2r1),
            csv_float(*o),
            csv_float(e.gradient_sup),
            e.iterations.iter().sum::<usize>(),
            e.converged
        )
        .unwrap();
    }
    let values = rep.values_at_2r1();
    let gap = values.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let all_converged = rep.entries.iter().all(|e| e.converged);
    let ordered = rep.ordering_violation <= MAX_PRINCIPLE_TOL;
    let oracle_ok = gap <= spec.oracle_tol;
    let first = values[0];
    let report = json!({
        "r0": r0,
        "delta0": delta0,
        "t": t,
        "r1": spec.r1,
        "h": spec.h,
        "outer_radii": spec.outer_radii,
        "u_at_2r1": values,
        "oracle_u_at_2r1": oracle,
        "max_oracle_gap": gap,
        "ratio_last_first": values.last().map(|v| v / first),
        // Flat-plane reference: u(2r₁) ≈ t ln 2 / ln(R/r₁).
        "harmonic_u_at_2r1": spec.outer_radii.iter().map(|r| t * LN_2 / (r / spec.r1).ln()).collect::<Vec<_>>(),
        "ordering_violation": rep.ordering_violation,
        "invariants": { "converged": all_converged, "ordered": ordered, "oracle": oracle_ok },
    });
    Ok(Artifacts {
        files: vec![(cfg.outputs.data_name("family.csv"), table)],
        report,
        passed: all_converged && ordered && oracle_ok,
    })
}

fn read_solution(cfg: &ExperimentConfig, path: &Path) -> Result<(ChartMetric, ScalarField), Failure> {
    let metric = cfg.metric().map_err(schema)?;
    let mesh = cfg.mesh().map_err(schema)?;
    mesh.check_compatible(&metric).map_err(|e| schema(format!("mesh: {e}")))?;
    let u = field_io::read(path, &mesh).map_err(|e| schema(format!("solution: {e}")))?;
    if u.values().iter().any(|v| !v.is_finite()) {
        return Err(Failure::Schema("solution: values must be finite".into()));
    }
    Ok((metric, u))
}

fn estimate_check(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, Failure> {
    let path = ctx
        .solution
        .as_ref()
        .ok_or_else(|| Failure::Schema("estimate-check needs --solution PATH".into()))?;
    let (metric, u) = read_solution(cfg, path)?;
    let bounds = metric.curvature_bounds();
    let est = evaluate(&u, &metric, &bounds).map_err(|e| numerical(e, json!({})))?;
    let problem = DirichletProblem::from_field(metric, u.clone(), false).map_err(schema)?;
    let residual = assemble_residual(&problem, &u).map_err(|e| numerical(e, json!({})))?;
    let residual_sup = residual.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let passed = est.passed(cfg.estimates.tol);
    let report = json!({
        "estimates": estimates_json(&est),
        "estimate_tol": cfg.estimates.tol,
        // Informational: how far the field is from solving the equation.
        "residual_sup": residual_sup,
        "min_u": u.min(),
        "max_u": u.max(),
    });
    Ok(Artifacts {
        files: vec![],
        report,
        passed,
    })
}

fn oracle_compare(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, Failure> {
    let problem = cfg.problem(ctx.seed, &ctx.base).map_err(schema)?;
    let solver = cfg.solver().map_err(schema)?;
    let spec = cfg.oracle;
    let newton = solve_problem(&problem, &solver, "newton")?;
    let partial = json!({ "newton": solution_json(&newton) });
    let descent =
        minimize_area(&problem, spec.descent_tol, spec.max_iters).map_err(|e| numerical(e, partial.clone()))?;
    let f = AreaFunctional::new(&problem).map_err(|e| numerical(e, partial.clone()))?;
    let area_newton = f.discrete_area(&newton.u).map_err(|e| numerical(e, partial.clone()))?;
    let sup_diff = descent.u.sup_distance(&newton.u).map_err(|e| numerical(e, partial.clone()))?;
    let mut variation_diff: f64 = 0.0;
    let guess = problem.initial_guess().map_err(|e| numerical(e, partial.clone()))?;
    for u in [&newton.u, &guess] {
        let fv = f.first_variation(u).map_err(|e| numerical(e, partial.clone()))?;
        let unknowns = f.unknowns(u).map_err(|e| numerical(e, partial.clone()))?;
        let r = f.layout().residual(&unknowns);
        variation_diff = fv.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(variation_diff, f64::max);
    }
    let radial_diff = match (problem.metric.warp(), problem.mesh, cfg.boundary.as_ref().and_then(|b| b.two_level())) {
        (Some(warp), Mesh::PolarAnnulus { r, .. }, Some((inner, outer))) => {
            let p = radial_shoot(warp, r[0], r[1], (outer - inner).abs()).map_err(|e| numerical(e, partial.clone()))?;
            let sign = if outer >= inner { 1.0 } else { -1.0 };
            let mut worst: f64 = 0.0;
            for (k, v) in newton.u.values().iter().enumerate() {
                let rr = problem.mesh.node_coords(k)[0];
                let exact = inner + sign * p.value(rr).map_err(|e| numerical(e, partial.clone()))?;
                worst = worst.max((v - exact).abs());
            }
            Some(worst)
        }
        _ => None,
    };
    let minimal = area_newton <= descent.area + 1e-9;
    let agree = sup_diff <= spec.sup_tol;
    let variation_ok = variation_diff <= spec.variation_tol;
    let report = json!({
        "area_newton": area_newton,
        "area_descent": descent.area,
        "sup_diff": sup_diff,
        "radial_diff": radial_diff,
        "first_variation_diff": variation_diff,
        "descent_iterations": descent.iterations,
        "descent_gradient_sup": descent.gradient_sup,
        "newton": solution_json(&newton),
        "invariants": { "agreement": agree, "first_variation": variation_ok, "minimality": minimal },
    });
    Ok(Artifacts {
        files: vec![],
        report,
        passed: agree && variation_ok && minimal,
    })
}

fn geometry_report(cfg: &ExperimentConfig, ctx: &Context) -> Result<Artifacts, Failure> {
    let (metric, u, solved) = match &ctx.solution {
        Some(path) => {
            let (m, u) = read_solution(cfg, path)?;
            (m, u, None)
        }
        None => {
            let problem = cfg.problem(ctx.seed, &ctx.base).map_err(schema)?;
            let solver = cfg.solver().map_err(schema)?;
            let s = solve_problem(&problem, &solver, "solve")?;
            (problem.metric.clone(), s.u.clone(), Some(solution_json(&s)))
        }
    };
    let fail = |e: minigraph::Error| numerical(e, json!({}));
    let geo = compute_quantities(&metric, &u).map_err(fail)?;
    let lift = gradient_lift_field(&metric, &u).map_err(fail)?;
    let jac = jacobi_residual(&metric, &u).map_err(fail)?;
    let det = det_identity_check(&metric, &u).map_err(fail)?;
    let inv = inverse_identity_check(&metric, &u).map_err(fail)?;
    let mesh = u.mesh();
    let mut table = String::from("i,j,x1,x2,u,W,H,A2,angle,jacobi_residual\n");
    let mut a2_gap = f64::INFINITY;
    let mut h_sup: f64 = 0.0;
    let mut angle_ok = true;
    for (k, node) in geo.nodes.iter().enumerate() {
        let (i, j) = mesh.logical(k);
        let x = mesh.node_coords(k);
        let w = lift.values()[k];
        let (h, a2) = node.as_ref().map_or((f64::NAN, f64::NAN), |g| (g.mean_curvature, g.norm_a_sq));
        if node.is_some() {
            a2_gap = a2_gap.min(a2 - 2.0 * h * h);
            if !mesh.is_boundary(k) {
                h_sup = h_sup.max(h.abs());
            }
        }
        angle_ok &= 1.0 / w > 0.0 && 1.0 / w <= 1.0;
        let jr = if jac.valid[k] { jac.values[k] } else { f64::NAN };
        writeln!(
            table,
            "{i},{j},{},{},{},{},{},{},{},{}",
            csv_float(x[0]),
            csv_float(x[1]),
            csv_float(u.values()[k]),
            csv_float(w),
            csv_float(h),
            csv_float(a2),
            csv_float(1.0 / w),
            csv_float(jr)
        )
        .unwrap();
    }
    let a2_ok = a2_gap >= -IDENTITY_TOL;
    let ids_ok = det <= IDENTITY_TOL && inv <= IDENTITY_TOL;
    let report = json!({
        "det_identity": det,
        "inverse_identity": inv,
        "min_a2_minus_nh2": a2_gap,
        "interior_mean_curvature_sup": h_sup,
        "jacobi_residual_sup": jac.sup_norm(),
        "solution": solved,
        "invariants": { "identities": ids_ok, "a2_bound": a2_ok, "angle_range": angle_ok },
    });
    Ok(Artifacts {
        files: vec![(cfg.outputs.data_name("geometry.csv"), table)],
        report,
        passed: ids_ok && a2_ok && angle_ok,
    })
}

fn rigidity(cfg: &ExperimentConfig) -> Result<Artifacts, Failure> {
    let spec = cfg.require(&cfg.rigidity, "rigidity").map_err(schema)?;
    let solver = cfg.solver().map_err(schema)?;
    if spec.radii.is_empty() || spec.epsilons.is_empty() {
        return Err(Failure::Schema("rigidity: radii and epsilons must not be empty".into()));
    }
    let setup = RigiditySetup {
        warp: spec.warp.build(),
        radii: spec.radii.clone(),
        epsilons: spec.epsilons.clone(),
        amplitude: spec.amplitude,
        nr: spec.nr,
        ntheta: spec.ntheta,
    };
    let rep = rigidity_experiment(&setup, &solver).map_err(|e| match e {
        minigraph::Error::Domain(_) | minigraph::Error::Contract(_) => schema(format!("rigidity: {e}")),
        e => numerical(e, json!({})),
    })?;
    let mut table = String::from("R,epsilon,inf_u,sup_u,C,harnack,converged\n");
    for r in &rep.rows {
        writeln!(
            table,
            "{},{},{},{},{},{},{}",
            csv_float(r.radius),
            csv_float(r.epsilon),
            csv_float(r.inf_u),
            csv_float(r.sup_u),
            csv_float(r.c),
            csv_float(r.harnack),
            r.converged
        )
        .unwrap();
    }
    let converged = rep.rows.iter().all(|r| r.converged);
    let stable = rep.harnack_variation() <= spec.max_variation;
    let report = json!({
        "amplitude": rep.amplitude,
        "rows": rep.rows.iter().map(|r| json!({
            "radius": r.radius,
            "epsilon": r.epsilon,
            "inf_u": r.inf_u,
            "sup_u": r.sup_u,
            "c": r.c,
            "harnack": r.harnack,
            "converged": r.converged,
        })).collect::<Vec<_>>(),
        "harnack_variation": rep.harnack_variation(),
        "c_variation": rep.c_variation(),
        "max_variation": spec.max_variation,
        "invariants": { "converged": converged, "harnack_stable": stable },
    });
    Ok(Artifacts {
        files: vec![(cfg.outputs.data_name("rigidity.csv"), table)],
        report,
        passed: converged && stable,
    })
}
