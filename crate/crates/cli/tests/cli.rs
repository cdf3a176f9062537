use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = "\
rho1 = 1
rho2 = 3
nu1 = 1
nu2 = 1
theta = 0.8
theta0 = 1.5
alpha = 0.1
n = 32
dt = 1e-3
";

fn aggf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggf")).args(args).output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{BASE}{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn zero_length_run_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 0\n");
    let out = dir.path().join("out");
    let o = aggf(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(table.lines().count(), 1);
    assert!(table.starts_with("t,e_kin,e_free,e_total"));
}

#[test]
fn run_table_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 0.01\n");
    let out = dir.path().join("out");
    let o = aggf(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.split(',').count() == 12));
    assert!(out.join("final.aggf").exists());
    assert!(out.join("config.txt").exists());
}

#[test]
fn resumed_run_matches_straight_run() {
    let dir = tempfile::tempdir().unwrap();
    let straight = dir.path().join("straight");
    let cfg = write_config(dir.path(), "t_end = 0.02\nsnapshot_every = 10\n");
    let o = aggf(&["run", "--config", &cfg, "--out", straight.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let resumed = dir.path().join("resumed");
    let ck = straight.join("snapshot_000010.aggf");
    let o = aggf(&[
        "run",
        "--config",
        &cfg,
        "--out",
        resumed.to_str().unwrap(),
        "--resume",
        ck.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read(straight.join("final.aggf")).unwrap();
    let b = fs::read(resumed.join("final.aggf")).unwrap();
    assert!(a == b, "resumed final state differs");
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 1\ntheta0 = 0.5\n");
    let o = aggf(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));

    let path = dir.path().join("bad.cfg");
    fs::write(&path, BASE.replace("theta0 = 1.5", "theta0 = 0.5").to_string() + "t_end = 1\n").unwrap();
    let o = aggf(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("theta0"), "{err}");
}

#[test]
fn missing_config_is_a_usage_error() {
    let o = aggf(&["run"]);
    assert_eq!(o.status.code(), Some(2));
    let o = aggf(&["stability", "--config", "/nonexistent/file.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatched_resume_snapshot_fails() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small");
    let cfg = write_config(dir.path(), "t_end = 0.001\n");
    assert!(aggf(&["run", "--config", &cfg, "--out", small.to_str().unwrap()]).status.success());

    let path = dir.path().join("big.cfg");
    fs::write(&path, BASE.replace("n = 32", "n = 16") + "t_end = 0.002\n").unwrap();
    let o = aggf(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--resume",
        small.join("final.aggf").to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not match"));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = aggf(&["verify", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    assert!(!stdout.contains("FAIL"));
}
