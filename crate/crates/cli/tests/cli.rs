use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minigraph"))
}

struct Run {
    code: i32,
    stderr: String,
}

fn run(dir: &Path, sub: &[&str], config: &str, out: &str, extra: &[&str]) -> Run {
    let cfg = dir.join(format!("{out}.json"));
    fs::write(&cfg, config).unwrap();
    let o = bin()
        .args(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: o.status.code().unwrap(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn report(dir: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(out).join("report.json")).unwrap()).unwrap()
}

const DISK_SOLVE: &str = r#"{
  "experiment": "solve",
  "metric": {"kind": "hyperbolic_polar", "kappa": -1, "r_min": 0, "r_max": 2},
  "mesh": {"type": "polar_disk", "radius": 2, "nr": 13, "ntheta": 12},
  "boundary": {"type": "fourier", "mean": 1.0, "modes": [[2, 0.3, 0.1]]}
}"#;

#[test]
fn solve_then_estimate_check() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let r = run(d, &["solve"], DISK_SOLVE, "solve", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "solve");
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["solution"]["converged"], true);
    assert!(rep["solution"]["iterations"].as_u64().unwrap() > 0);
    assert!(rep["estimates"]["lemma31"]["slack"].as_f64().unwrap() >= -1e-8);
    assert!(rep["estimates"]["thm41"]["slack"].as_f64().unwrap() > 0.0);
    let text = fs::read_to_string(d.join("solve/solution.csv")).unwrap();
    assert!(text.starts_with("# minigraph-field v1, mesh=polar_disk, dims=13x12\n"));

    let check = DISK_SOLVE.replace("\"solve\"", "\"estimate-check\"");
    let sol = d.join("solve/solution.csv");
    let r = run(d, &["estimate-check", "--solution", sol.to_str().unwrap()], &check, "check", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "check");
    assert!(rep["residual_sup"].as_f64().unwrap() < 1e-8);

    // Same field checked against a mesh of other dims is an input error.
    let wrong = check.replace("\"nr\": 13", "\"nr\": 15");
    let r = run(d, &["estimate-check", "--solution", sol.to_str().unwrap()], &wrong, "wrong", &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("dims"), "{}", r.stderr);
    assert!(!d.join("wrong").exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(run(d, &["solve"], DISK_SOLVE, "a", &["--threads", "1"]).code, 0);
    assert_eq!(run(d, &["solve"], DISK_SOLVE, "b", &["--threads", "3"]).code, 0);
    for f in ["report.json", "solution.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_configs_exit_2_without_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases = [
        DISK_SOLVE.replace("\"boundary\"", "\"boundry\""),
        DISK_SOLVE.replace("\"nr\": 13", "\"nr\": 3"),
        DISK_SOLVE.replace("\"kappa\": -1", "\"kappa\": 1"),
        "{ not json".to_string(),
        DISK_SOLVE.replace("\"mesh\"", "\"meshes\""),
    ];
    for (k, cfg) in cases.iter().enumerate() {
        let out = format!("bad{k}");
        let r = run(d, &["solve"], cfg, &out, &[]);
        assert_eq!(r.code, 2, "case {k}: {}", r.stderr);
        assert!(!d.join(&out).exists(), "case {k} wrote outputs");
    }
    let r = run(d, &["solve"], &DISK_SOLVE.replace("\"boundary\"", "\"boundry\""), "diag", &[]);
    assert!(r.stderr.contains("unknown field `boundry`") && r.stderr.contains("line"), "{}", r.stderr);
    let r = run(d, &["barrier"], DISK_SOLVE, "mismatch", &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("subcommand"));
}

#[test]
fn numerical_failure_exits_3_with_partial_report() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "solve",
      "metric": {"kind": "euclidean", "lo": [0, 0], "hi": [1, 1]},
      "mesh": {"type": "box", "x": [0, 1], "y": [0, 1], "nx": 9, "ny": 9},
      "boundary": {"type": "random", "amplitude": 5.0, "center": 0.0},
      "solver": {"max_newton_iters": 1, "continuation_steps": 1}
    }"#;
    let r = run(d, &["solve"], cfg, "fail", &[]);
    assert_eq!(r.code, 3, "{}", r.stderr);
    let rep = report(d, "fail");
    assert_eq!(rep["passed"], false);
    assert!(rep["error"].as_str().unwrap().contains("did not converge"));
    assert_eq!(rep["partial"]["failed_step"], 1);
    assert!(!d.join("fail/solution.csv").exists());
}

#[test]
fn seeds_drive_random_boundary_data() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "solve",
      "metric": {"kind": "euclidean", "lo": [0, 0], "hi": [1, 1]},
      "mesh": {"type": "box", "x": [0, 1], "y": [0, 1], "nx": 9, "ny": 9},
      "boundary": {"type": "random", "amplitude": 0.5, "center": 0.0}
    }"#;
    for (out, seed) in [("s1", "11"), ("s2", "11"), ("s3", "12")] {
        let r = run(d, &["solve"], cfg, out, &["--seed", seed]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert!(report(d, out)["max_principle_slack"].as_f64().unwrap() >= -1e-12);
    }
    let f = |o: &str| fs::read(d.join(o).join("solution.csv")).unwrap();
    assert_eq!(f("s1"), f("s2"));
    assert_ne!(f("s1"), f("s3"));
}

#[test]
fn boundary_from_field_file() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(run(d, &["solve"], DISK_SOLVE, "first", &[]).code, 0);
    let cfg = DISK_SOLVE.replace(
        r#"{"type": "fourier", "mean": 1.0, "modes": [[2, 0.3, 0.1]]}"#,
        r#"{"type": "field", "path": "first/solution.csv"}"#,
    );
    assert_eq!(run(d, &["solve"], &cfg, "second", &[]).code, 0);
    let f = |o: &str| fs::read_to_string(d.join(o).join("solution.csv")).unwrap();
    let parse = |s: String| -> Vec<f64> {
        s.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect()
    };
    let (a, b) = (parse(f("first")), parse(f("second")));
    let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-9, "{gap}");
}

#[test]
fn barrier_certificate_and_negative_control() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "barrier",
      "metric": {"kind": "hyperbolic_polar", "kappa": -1, "r_min": 0, "r_max": 8},
      "barrier": {"n": 2, "r0": "auto", "r0_cap": 10}
    }"#;
    let r = run(d, &["barrier"], cfg, "auto", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "auto");
    assert!(rep["min_margin"].as_f64().unwrap() > 0.0);
    assert_eq!(rep["r0_source"], "auto");
    assert!((rep["C2"].as_f64().unwrap() - 15f64.sqrt().recip()).abs() < 1e-15);
    let table = fs::read_to_string(d.join("auto/barrier_profile.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "r,phi,phi_prime,Mw");
    assert_eq!(table.lines().count(), 202);

    let big = cfg.replace("\"auto\", \"r0_cap\": 10", "1.5");
    let r = run(d, &["barrier"], &big, "big", &[]);
    assert_eq!(r.code, 1);
    assert!(report(d, "big")["min_margin"].as_f64().unwrap() <= 0.0);
}

#[test]
fn flat_annulus_family_decays_and_matches_shooting() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "annulus-family",
      "metric": {"kind": "flat_polar", "r_min": 0, "r_max": 16},
      "family": {"r1": 1, "outer_radii": [4, 8, 16], "t": "auto", "h": 0.0625}
    }"#;
    let r = run(d, &["annulus-family"], cfg, "fam", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "fam");
    let v: Vec<f64> = rep["u_at_2r1"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(rep["max_oracle_gap"].as_f64().unwrap() < 1e-5);
    let csv = fs::read_to_string(d.join("fam/family.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let too_high = cfg.replace("\"auto\"", "5.0");
    assert_eq!(run(d, &["annulus-family"], &too_high, "high", &[]).code, 2);
}

#[test]
fn oracle_compare_on_box_and_annulus() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "oracle-compare",
      "metric": {"kind": "euclidean", "lo": [0, 0], "hi": [1, 1]},
      "mesh": {"type": "box", "x": [0, 1], "y": [0, 1], "nx": 9, "ny": 9},
      "boundary": {"type": "affine", "a": [0.3, -0.2], "c": 0.1}
    }"#;
    let r = run(d, &["oracle-compare"], cfg, "box", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "box");
    assert!(rep["sup_diff"].as_f64().unwrap() <= 1e-6);
    assert!(rep["first_variation_diff"].as_f64().unwrap() <= 1e-12);
    assert!(rep["radial_diff"].is_null());

    let ann = r#"{
      "experiment": "oracle-compare",
      "metric": {"kind": "flat_polar", "r_min": 1, "r_max": 3},
      "mesh": {"type": "polar_annulus", "r": [1, 3], "nr": 33, "ntheta": 8},
      "radial": true,
      "boundary": {"type": "two_level", "inner": 0.2, "outer": 0.6}
    }"#;
    let r = run(d, &["oracle-compare"], ann, "ann", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(report(d, "ann")["radial_diff"].as_f64().unwrap() < 1e-3);
}

#[test]
fn geometry_report_on_catenoid() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "geometry-report",
      "metric": {"kind": "flat_polar", "r_min": 1, "r_max": 4},
      "mesh": {"type": "polar_annulus", "r": [1.5, 4], "nr": 33, "ntheta": 8},
      "boundary": {"type": "catenoid", "neck": 1}
    }"#;
    let r = run(d, &["geometry-report"], cfg, "geo", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "geo");
    assert!(rep["det_identity"].as_f64().unwrap() <= 1e-12);
    assert!(rep["interior_mean_curvature_sup"].as_f64().unwrap() < 1e-2);
    let csv = fs::read_to_string(d.join("geo/geometry.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "i,j,x1,x2,u,W,H,A2,angle,jacobi_residual");
    assert_eq!(csv.lines().count(), 1 + 33 * 8);
}

#[test]
fn rigidity_ratios_are_stable() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = r#"{
      "experiment": "rigidity",
      "rigidity": {"warp": {"kind": "flat"}, "radii": [2, 4], "epsilons": [0.1], "amplitude": 1, "nr": 9, "ntheta": 16}
    }"#;
    let r = run(d, &["rigidity"], cfg, "rig", &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep = report(d, "rig");
    assert!(rep["harnack_variation"].as_f64().unwrap() <= 0.2);
    assert_eq!(rep["rows"].as_array().unwrap().len(), 2);
}

fn write_field_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

#[test]
fn legacy_field_files_get_a_migration_hint() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let old = write_field_file(d, "old.csv", "# minigraph-field v0, mesh=polar_disk, dims=13x12\n0,0,1.0\n");
    let check = DISK_SOLVE.replace("\"solve\"", "\"estimate-check\"");
    let r = run(d, &["estimate-check", "--solution", old.to_str().unwrap()], &check, "old", &[]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("v0") && r.stderr.contains("Re-export"), "{}", r.stderr);
}

#[test]
fn shipped_configs_run_clean() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = TempDir::new().unwrap();
    let mut paths: Vec<PathBuf> = fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    // solve first: estimate-check reads its solution.
    paths.sort_by_key(|p| (!p.file_name().unwrap().to_str().unwrap().starts_with("solve"), p.clone()));
    assert!(paths.len() >= 8);
    for p in paths {
        let name = p.file_stem().unwrap().to_str().unwrap().to_string();
        let cfg: Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        let sub = cfg["experiment"].as_str().unwrap().to_string();
        let mut cmd = bin();
        cmd.arg(&sub).arg("--config").arg(&p).arg("--out").arg(tmp.path().join(&name));
        if sub == "estimate-check" {
            let sol = tmp.path().join(name.replace("estimate_check", "solve")).join("solution.csv");
            cmd.arg("--solution").arg(sol);
        }
        let o = cmd.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(report(tmp.path(), &name)["passed"], true, "{name}");
    }
}
