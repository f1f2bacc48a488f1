//! Experiment configuration files (JSON). Unknown keys are rejected at every
//! level, and everything is validated before any computation starts.

use std::path::{Path, PathBuf};

use minigraph::solver::{DirichletProblem, SolverConfig};
use minigraph::{ChartMetric, Mesh, ScalarField, Warp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::field_io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Solve,
    Barrier,
    AnnulusFamily,
    EstimateCheck,
    OracleCompare,
    GeometryReport,
    Rigidity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::Barrier => "barrier",
            Experiment::AnnulusFamily => "annulus-family",
            Experiment::EstimateCheck => "estimate-check",
            Experiment::OracleCompare => "oracle-compare",
            Experiment::GeometryReport => "geometry-report",
            Experiment::Rigidity => "rigidity",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub metric: Option<MetricSpec>,
    pub mesh: Option<MeshSpec>,
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Solve the rotationally symmetric reduction.
    #[serde(default)]
    pub radial: bool,
    pub barrier: Option<BarrierSpec>,
    pub family: Option<FamilySpec>,
    pub rigidity: Option<RigiditySpec>,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub estimates: EstimateSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Euclidean {
        lo: [f64; 2],
        hi: [f64; 2],
    },
    FlatPolar {
        r_min: f64,
        r_max: f64,
    },
    HyperbolicPolar {
        #[serde(default = "two")]
        dim: usize,
        kappa: f64,
        r_min: f64,
        r_max: f64,
    },
    SphericalPolar {
        #[serde(default = "two")]
        dim: usize,
        kappa: f64,
        r_min: f64,
        r_max: f64,
    },
}

fn two() -> usize {
    2
}

impl MetricSpec {
    pub fn build(&self) -> minigraph::Result<ChartMetric> {
        match *self {
            MetricSpec::Euclidean { lo, hi } => ChartMetric::euclidean(2, lo.to_vec(), hi.to_vec()),
            MetricSpec::FlatPolar { r_min, r_max } => ChartMetric::flat_polar(r_min, r_max),
            MetricSpec::HyperbolicPolar { dim, kappa, r_min, r_max } => {
                ChartMetric::hyperbolic_polar(dim, kappa, r_min, r_max)
            }
            MetricSpec::SphericalPolar { dim, kappa, r_min, r_max } => {
                ChartMetric::rotationally_symmetric(dim, Warp::Spherical { kappa }, r_min, r_max)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Box { x: [f64; 2], y: [f64; 2], nx: usize, ny: usize },
    PolarAnnulus { r: [f64; 2], nr: usize, ntheta: usize },
    PolarDisk { radius: f64, nr: usize, ntheta: usize },
}

impl MeshSpec {
    pub fn build(&self) -> minigraph::Result<Mesh> {
        let mesh = match *self {
            MeshSpec::Box { x, y, nx, ny } => Mesh::Box { x, y, nx, ny },
            MeshSpec::PolarAnnulus { r, nr, ntheta } => Mesh::PolarAnnulus { r, nr, ntheta },
            MeshSpec::PolarDisk { radius, nr, ntheta } => Mesh::PolarDisk { radius, nr, ntheta },
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Dirichlet data. Polar meshes see `x = (r, θ)`, boxes see `x = (x, y)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant { value: f64 },
    /// `c + a·x` in chart coordinates.
    Affine { a: [f64; 2], c: f64 },
    /// `neck · arcosh(r/neck)`, the upper half of a catenoid.
    Catenoid { neck: f64 },
    /// `mean + Σ (a cos kθ + b sin kθ)` with rows `[k, a, b]`; polar meshes only.
    Fourier { mean: f64, modes: Vec<[f64; 3]> },
    /// `inner` on the inner circle of an annulus and `outer` on the outer one.
    TwoLevel { inner: f64, outer: f64 },
    /// Independent uniform values in `[center − amplitude, center + amplitude]`
    /// at every boundary node, drawn from `--seed`.
    Random { amplitude: f64, center: f64 },
    /// Boundary values taken from a field file; interior rows are ignored.
    Field { path: PathBuf },
}

impl BoundarySpec {
    pub fn field(&self, mesh: Mesh, seed: u64, base: &Path) -> Result<ScalarField, String> {
        let polar = mesh.is_polar();
        let err = |e: minigraph::Error| e.to_string();
        match self {
            BoundarySpec::Constant { value } => ScalarField::constant(mesh, *value).map_err(err),
            BoundarySpec::Affine { a, c } => ScalarField::from_fn(mesh, |x| c + a[0] * x[0] + a[1] * x[1]).map_err(err),
            BoundarySpec::Catenoid { neck } => {
                if !polar || !(*neck > 0.0) {
                    return Err("catenoid data needs a polar mesh and a positive neck".into());
                }
                let r_in = match mesh {
                    Mesh::PolarAnnulus { r, .. } => r[0],
                    _ => 0.0,
                };
                if r_in < *neck {
                    return Err(format!("catenoid data needs r >= neck = {neck}, mesh starts at {r_in}"));
                }
                ScalarField::from_fn(mesh, |x| neck * (x[0] / neck).acosh()).map_err(err)
            }
            BoundarySpec::Fourier { mean, modes } => {
                if !polar {
                    return Err("fourier data needs a polar mesh".into());
                }
                if modes.iter().any(|m| m[0] < 0.0 || m[0].fract() != 0.0) {
                    return Err("fourier mode numbers must be nonnegative integers".into());
                }
                ScalarField::from_fn(mesh, |x| {
                    mean + modes.iter().map(|m| m[1] * (m[0] * x[1]).cos() + m[2] * (m[0] * x[1]).sin()).sum::<f64>()
                })
                .map_err(err)
            }
            BoundarySpec::TwoLevel { inner, outer } => {
                let Mesh::PolarAnnulus { r, .. } = mesh else {
                    return Err("two_level data needs a polar annulus".into());
                };
                let mid = 0.5 * (r[0] + r[1]);
                ScalarField::from_fn(mesh, |x| if x[0] > mid { *outer } else { *inner }).map_err(err)
            }
            BoundarySpec::Random { amplitude, center } => {
                if !(*amplitude >= 0.0) {
                    return Err("random amplitude must be nonnegative".into());
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = (0..mesh.num_nodes())
                    .map(|k| {
                        if mesh.is_boundary(k) {
                            center + amplitude * rng.gen_range(-1.0..=1.0)
                        } else {
                            *center
                        }
                    })
                    .collect();
                ScalarField::new(mesh, values).map_err(err)
            }
            BoundarySpec::Field { path } => field_io::read(&base.join(path), &mesh).map_err(err),
        }
    }

    /// `(inner, outer)` for rotationally symmetric annulus data.
    pub fn two_level(&self) -> Option<(f64, f64)> {
        match self {
            BoundarySpec::TwoLevel { inner, outer } => Some((*inner, *outer)),
            BoundarySpec::Constant { value } => Some((*value, *value)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub backtrack_factor: f64,
    pub min_step: f64,
    pub continuation_steps: usize,
    pub linear_solver_tol: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            newton_tol: c.newton_tol,
            max_newton_iters: c.max_newton_iters,
            backtrack_factor: c.backtrack_factor,
            min_step: c.min_step,
            continuation_steps: c.continuation_steps,
            linear_solver_tol: c.linear_solver_tol,
        }
    }
}

impl SolverSpec {
    pub fn build(&self) -> minigraph::Result<SolverConfig> {
        let c = SolverConfig {
            newton_tol: self.newton_tol,
            max_newton_iters: self.max_newton_iters,
            backtrack_factor: self.backtrack_factor,
            min_step: self.min_step,
            continuation_steps: self.continuation_steps,
            linear_solver_tol: self.linear_solver_tol,
        };
        c.validate()?;
        Ok(c)
    }
}

/// A number, or `"auto"` to derive the value from the metric.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Auto {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub n: usize,
    pub r0: Auto,
    /// Upper bound for an automatic `r0`.
    #[serde(default = "default_r0_cap")]
    pub r0_cap: f64,
    /// Rows of the profile table on `[2r₀, 4r₀]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_r0_cap() -> f64 {
    0.5
}

fn default_samples() -> usize {
    201
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub r1: f64,
    pub outer_radii: Vec<f64>,
    /// Outer height; `"auto"` uses the barrier cap δ₀.
    pub t: Auto,
    pub h: f64,
    #[serde(default = "default_r0_cap")]
    pub r0_cap: f64,
    /// Allowed gap to the shooting oracle at `2r₁`.
    #[serde(default = "default_family_oracle_tol")]
    pub oracle_tol: f64,
}

fn default_family_oracle_tol() -> f64 {
    1e-5
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WarpSpec {
    Flat,
    Spherical { kappa: f64 },
}

impl WarpSpec {
    pub fn build(self) -> Warp {
        match self {
            WarpSpec::Flat => Warp::Flat,
            WarpSpec::Spherical { kappa } => Warp::Spherical { kappa },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigiditySpec {
    pub warp: WarpSpec,
    pub radii: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub amplitude: f64,
    pub nr: usize,
    pub ntheta: usize,
    #[serde(default = "default_max_variation")]
    pub max_variation: f64,
}

fn default_max_variation() -> f64 {
    0.2
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Stop the area descent once the scaled gradient is below this.
    pub descent_tol: f64,
    pub max_iters: usize,
    /// Allowed sup-norm gap between descent and Newton.
    pub sup_tol: f64,
    /// Allowed gap between the dual-number first variation and the residual.
    pub variation_tol: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            descent_tol: 1e-9,
            max_iters: 500_000,
            sup_tol: 1e-6,
            variation_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSpec {
    pub tol: f64,
}

impl Default for EstimateSpec {
    fn default() -> Self {
        Self { tol: 1e-8 }
    }
}

/// File names inside the output directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub report: String,
    /// CSV data file; each experiment has its own default name.
    pub data: Option<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            report: "report.json".into(),
            data: None,
        }
    }
}

impl OutputSpec {
    pub fn data_name(&self, fallback: &str) -> String {
        self.data.clone().unwrap_or_else(|| fallback.to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        for name in std::iter::once(&self.report).chain(self.data.as_ref()) {
            let p = Path::new(name);
            if name.is_empty() || p.components().count() != 1 || p.file_name().is_none() {
                return Err(format!("output names must be plain file names, got {name:?}"));
            }
        }
        if self.data.as_ref() == Some(&self.report) {
            return Err("report and data outputs must differ".into());
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config: {e}"))
    }

    pub fn require<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T, String> {
        block
            .as_ref()
            .ok_or_else(|| format!("config: the {} experiment needs a `{name}` block", self.experiment.name()))
    }

    pub fn metric(&self) -> Result<ChartMetric, String> {
        self.require(&self.metric, "metric")?.build().map_err(|e| format!("metric: {e}"))
    }

    pub fn mesh(&self) -> Result<Mesh, String> {
        self.require(&self.mesh, "mesh")?.build().map_err(|e| format!("mesh: {e}"))
    }

    pub fn solver(&self) -> Result<SolverConfig, String> {
        self.solver.build().map_err(|e| format!("solver: {e}"))
    }

    pub fn problem(&self, seed: u64, base: &Path) -> Result<DirichletProblem, String> {
        let metric = self.metric()?;
        let mesh = self.mesh()?;
        let data = self
            .require(&self.boundary, "boundary")?
            .field(mesh, seed, base)
            .map_err(|e| format!("boundary: {e}"))?;
        if data.values().iter().any(|v| !v.is_finite()) {
            return Err("boundary: data must be finite".into());
        }
        DirichletProblem::from_field(metric, data, self.radial).map_err(|e| format!("problem: {e}"))
    }
}
