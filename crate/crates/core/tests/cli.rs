use std::path::Path;
use std::process::{Command, Output};

fn maclens(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_maclens"));
    cmd.args(args).env_remove("MACLENS_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn mac_run_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = maclens(
        &["mac", "--battery", "mac", "--samples", "10", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mac"]["rows"].as_array().unwrap().len(), 12);
    assert!(report["probes"].is_null() && report["patching"].is_null());
    assert!(out.join("trajectories.csv").exists());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = maclens(&["mac", "--battery", "scaling", "--samples", "4"], &[("MACLENS_OUT", &out)]);
    assert_eq!(code(&o), 0);
    assert!(out.join("report.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"samples": 10, "unknown_key": true}"#).unwrap();
    let o = maclens(&["mac", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));

    let o = maclens(&["mac", "--battery", "nope"], &[]);
    assert_eq!(code(&o), 2);

    let o = maclens(&["all", "--stages", "mac,bogus"], &[]);
    assert_eq!(code(&o), 2);

    let missing = dir.path().join("missing.json");
    let o = maclens(&["probes", "--config", missing.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, b"not a directory").unwrap();
    let o = maclens(&["mac", "--battery", "scaling", "--samples", "4", "--out", file.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn printed_config_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let o = maclens(&["print-config", "--seed", "9", "--samples", "12"], &[]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &o.stdout).unwrap();
    let cfg = maclens::pipeline::ExperimentConfig::load(&path).unwrap();
    assert_eq!((cfg.seed, cfg.samples), (9, 12));
}

#[test]
fn shipped_config_matches_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let mut cfg = maclens::pipeline::ExperimentConfig::load(&path).unwrap();
    cfg.base_dir = None;
    assert_eq!(cfg, maclens::pipeline::ExperimentConfig::default());
}

#[test]
fn sweep_tabulates_each_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = maclens(
        &["sweep", "--battery", "scaling", "--samples", "6", "--layers", "16,32", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let o = maclens(&["sweep", "--layers", "16"], &[]);
    assert_eq!(code(&o), 2);
}
