//! Command-line front end: configs in, CSV data and a JSON report out.
//!
//! Exit status: 0 when every declared invariant holds, 1 when one fails, 2 for
//! unusable inputs (nothing is written), 3 when a computation fails (only the
//! partial report is written).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod field_io;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Experiment, ExperimentConfig};
use experiments::{Context, Failure};

#[derive(Debug, Parser)]
#[command(name = "minigraph", version, about = "Minimal graphs over Riemannian chart metrics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for randomized boundary data.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one Dirichlet problem.
    Solve,
    /// Barrier profile table and supersolution certificate.
    Barrier,
    /// Graphs over expanding annuli and their values at 2r1.
    AnnulusFamily,
    /// Gradient estimates on a stored solution.
    EstimateCheck {
        #[arg(long)]
        solution: PathBuf,
    },
    /// Newton against direct area minimization.
    OracleCompare,
    /// Per-node geometry of a stored or freshly solved graph.
    GeometryReport {
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Harnack ratios on growing disks.
    Rigidity,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Solve => Experiment::Solve,
            Command::Barrier => Experiment::Barrier,
            Command::AnnulusFamily => Experiment::AnnulusFamily,
            Command::EstimateCheck { .. } => Experiment::EstimateCheck,
            Command::OracleCompare => Experiment::OracleCompare,
            Command::GeometryReport { .. } => Experiment::GeometryReport,
            Command::Rigidity => Experiment::Rigidity,
        }
    }

    fn solution(&self) -> Option<PathBuf> {
        match self {
            Command::EstimateCheck { solution } => Some(solution.clone()),
            Command::GeometryReport { solution } => solution.clone(),
            _ => None,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

fn report_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports are plain JSON");
    s.push('\n');
    s
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let path = cli.global.config.as_ref().ok_or("--config PATH is required")?;
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let wanted = cli.command.experiment();
    if cfg.experiment != wanted {
        return Err(format!(
            "config declares experiment {:?} but the subcommand is {:?}",
            cfg.experiment.name(),
            wanted.name()
        ));
    }
    Ok(cfg)
}

/// Runs the parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_SCHEMA;
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let base = cli
        .global
        .config
        .as_ref()
        .and_then(|p| p.parent())
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let ctx = Context {
        seed: cli.global.seed,
        base,
        solution: cli.command.solution(),
    };
    let outcome = experiments::run(&cfg, &ctx);
    if let Err(Failure::Schema(e)) = &outcome {
        eprintln!("error: {e}");
        return EXIT_SCHEMA;
    }
    if let Err(e) = fs::create_dir_all(&cli.global.out) {
        eprintln!("error: cannot create {}: {e}", cli.global.out.display());
        return EXIT_SCHEMA;
    }
    let (files, report, code) = match outcome {
        Ok(art) => {
            let code = if art.passed { EXIT_OK } else { EXIT_INVARIANT };
            (art.files, art.report, code)
        }
        Err(Failure::Numerical { message, partial }) => {
            eprintln!("numerical failure: {message}");
            let report = json!({
                "experiment": cfg.experiment.name(),
                "passed": false,
                "error": message,
                "partial": partial,
            });
            (vec![], report, EXIT_NUMERICAL)
        }
        Err(Failure::Schema(_)) => unreachable!("handled above"),
    };
    let mut all = files;
    all.push((cfg.outputs.report.clone(), report_text(&report)));
    for (name, contents) in &all {
        if let Err(e) = write_atomic(&cli.global.out, name, contents) {
            eprintln!("error: cannot write {name}: {e}");
            return EXIT_SCHEMA;
        }
    }
    code
}
