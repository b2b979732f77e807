use std::path::Path;
use std::process::{Command, Output};

fn cloakbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cloakbench")).args(args).output().expect("binary runs")
}

fn small_sweep(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["sweep", "--nmax", "8", "--delta-list", "0.1,0.01,0.001", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cloakbench(&args)
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(cloakbench(&["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(cloakbench(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cloakbench(&["sweep", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn invalid_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"deltas": [0.001, 0.1]}"#).unwrap();
    assert_eq!(cloakbench(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(cloakbench(&["sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(small_sweep(dir.path(), &["--ratio", "5,10"]).status.code(), Some(2));
    assert_eq!(cloakbench(&["sweep", "--delta-list", "0.1,-0.01"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_tables_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_sweep(dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("delta,misfit,interior_norm,jump_2r2,data_functional,stability_ratio"));
    assert_eq!(lines.count(), 3);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    for key in ["gamma_hat", "intercept", "r_squared", "jump_slope"] {
        assert!(fit[key].is_f64(), "{key}");
    }
    assert!(dir.path().join("controls.csv").exists());
}

#[test]
fn sweep_json_format() {
    let dir = tempfile::tempdir().unwrap();
    assert!(small_sweep(dir.path(), &["--format", "json"]).status.success());
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn single_delta_refuses_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = cloakbench(&["sweep", "--nmax", "8", "--delta-list", "0.01", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["status"], "too_few_points");
    assert!(fit["gamma_hat"].is_null());
    assert_eq!(std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap().lines().count(), 2);
}

#[test]
fn sweep_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(small_sweep(a.path(), &["--seed", "11"]).status.success());
    assert!(small_sweep(b.path(), &["--seed", "11"]).status.success());
    for f in ["sweep.csv", "fit.json", "controls.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn solve_writes_layout_modes_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = cloakbench(&["solve", "--nmax", "3", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let layout: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("layout.json")).unwrap()).unwrap();
    assert!(layout["regions"].is_array());
    let mode: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("modes/mode_n1_m1_tm.json")).unwrap()).unwrap();
    for key in ["mode", "outgoing", "grid", "u", "v"] {
        assert!(!mode[key].is_null(), "{key}");
    }
    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x,y,z,ReEx,ImEx,"));
}

#[test]
fn three_sphere_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cloakbench(&["three-sphere", "--seed", "2", "--out", dir.path().to_str().unwrap()]).status.success());
    let ineq = std::fs::read_to_string(dir.path().join("monte_carlo_3d.csv")).unwrap();
    assert!(ineq.starts_with("R1,R2,R3,alpha,lhs,rhs,ratio"));
    assert_eq!(ineq.lines().count(), 201);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("n,m,|c|,|d|"));
}

#[test]
fn verify_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = cloakbench(&["verify", "specfun", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["pass"], true);
    let table = std::fs::read_to_string(dir.path().join("specfun_residuals.csv")).unwrap();
    assert!(table.starts_with("n,r,spherical_residual,cylindrical_residual"));
    let csv = cloakbench(&["verify", "geomap", "--format", "csv"]);
    assert!(String::from_utf8_lossy(&csv.stdout).starts_with("suite,check,value,relation,bound,pass"));
}
