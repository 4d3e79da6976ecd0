use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], config: &str, dir: &Path, env: &[(&str, &str)]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_carleman-lab"));
    cmd.args(args).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out"));
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn malformed_key_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["geometry"], r#"{"cone": {"alpha": 0.5, "c_one": 1}}"#, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn experiment_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["geometry"], r#"{"experiment": "sweep"}"#, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_subcommand_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["nonsense"], "{}", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn geometry_reports_c3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["geometry"], r#"{"cone": {"alpha": 0.5, "c1": 1.0}}"#, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/geometry.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("c3,0,4097.0")), "{csv}");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/geometry.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identity_check_writes_200_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["identity-check"], "{}", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("out/identity-check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    let log = fs::read_to_string(tmp.path().join("out/identity-check.log")).unwrap();
    assert!(log.ends_with("result: pass\n"));
}

#[test]
fn failed_assertion_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["assumption-check"], r#"{"assumption": {"preset": "A2.3", "c0": 2.0}}"#, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let log = fs::read_to_string(tmp.path().join("out/assumption-check.log")).unwrap();
    assert!(log.contains("FAIL"));
    assert!(log.ends_with("result: fail\n"));
}

#[test]
fn gnuplot_script_is_optional() {
    let tmp = tempfile::tempdir().unwrap();
    lab(&["ucp-decay", "--paths", "4"], "{}", tmp.path(), &[]);
    assert!(!tmp.path().join("out/ucp-decay.gp").exists());
    let o = lab(&["ucp-decay", "--paths", "4", "--gnuplot"], "{}", tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let gp = fs::read_to_string(tmp.path().join("out/ucp-decay.gp")).unwrap();
    assert!(gp.contains("ucp-decay.csv"));
}

#[test]
fn bad_thread_count_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["geometry"], "{}", tmp.path(), &[("CARLEMAN_LAB_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_override_changes_hash_not_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |p: &str| fs::read(tmp.path().join(p)).unwrap();
    lab(&["qv-check", "--paths", "100"], "{}", tmp.path(), &[]);
    let first = read("out/qv-check.csv");
    lab(&["qv-check", "--paths", "100"], "{}", tmp.path(), &[("CARLEMAN_LAB_THREADS", "1")]);
    assert_eq!(first, read("out/qv-check.csv"));
    let meta_a = read("out/qv-check.meta.json");
    lab(&["qv-check", "--paths", "100", "--seed", "5"], "{}", tmp.path(), &[]);
    assert_ne!(first, read("out/qv-check.csv"));
    assert_ne!(meta_a, read("out/qv-check.meta.json"));
}
