use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levykernel"))
        .args(args)
        .env_remove("LEVYKERNEL_TOL")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_truncated_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--family", "truncated", "--alpha", "1.5", "--r0", "1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(dir.path().join("fits.csv").exists());

    let again = run(&["report", "--input", path(&dir.path().join("verify.json")), "--out", path(dir.path())]);
    assert_eq!(again.status.code(), Some(0));
    let summary = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(summary, std::fs::read_to_string(dir.path().join("fits.csv")).unwrap());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["density", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn high_intensity_beyond_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["density", "--family", "high-intensity", "--t", "1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t beyond validity horizon"));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("nu.json");
    std::fs::write(&cfg, "{\"d\": 1,\n \"radial\": {\"family\": \"truncated\", \"alpha\": 1.5, \"r0\": 1, \"scale\": 1},\n \"angular\": {\"type\": \"uniform\", \"mass\": 2}, \"extra\": 0}").unwrap();
    let out = run(&["symbol", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("extra") && err.contains("line 3"), "{err}");
}

#[test]
fn identical_runs_give_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&["mc", "--family", "truncated", "--t", "1", "--n", "100000", "--seed", "5", "--out", path(dir.path())]);
        assert_eq!(out.status.code(), Some(0));
        let out = run(&["density", "--family", "tempered", "--t", "0.5,2", "--x-max", "10", "--out", path(dir.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["mc_summary.json", "mc_discrepancy.csv", "density_t0.5.csv", "density_t2.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn tolerance_from_environment_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_levykernel"))
        .args(["verify", "--family", "truncated", "--out", path(dir.path())])
        .env("LEVYKERNEL_TOL", "0.5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn envelope_and_symbol_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["symbol", "--family", "tempered", "--out", path(dir.path())]).status.code(), Some(0));
    assert_eq!(
        run(&["envelope", "--family", "truncated", "--t", "1", "--out", path(dir.path())]).status.code(),
        Some(0)
    );
    let env = std::fs::read_to_string(dir.path().join("envelope.csv")).unwrap();
    assert!(env.starts_with("t,x,h,p,regime,d2,concentration_upper"));
    assert!(env.lines().skip(1).all(|l| {
        let f: Vec<&str> = l.split(',').collect();
        f[3].parse::<f64>().unwrap() <= f[6].parse::<f64>().unwrap() * (1.0 + 1e-9) + 1e-12
    }));
}
