//! End-to-end tests of the binary: exit codes, artifact layout, and the
//! byte-identical-summary determinism contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inert-drift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn summary(dir: &Path, sub: &str, seed: u64) -> Vec<u8> {
    fs::read(dir.join(format!("{sub}-seed{seed}")).join("summary.json")).expect("summary exists")
}

#[test]
fn deterministic_solve_passes_and_emits_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let st = run(&[
        "skorohod-solve",
        "--seed",
        "7",
        "--out",
        out,
        "--set",
        "driver=\"ramp\"",
        "--set",
        "mu=\"zero\"",
        "--set",
        "horizon=1.0",
    ]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let dir = tmp.path().join("skorohod-solve-seed7");
    assert!(dir.join("solution.csv").exists());
    assert!(dir.join("driver.csv").exists());
    let sol = fs::read_to_string(dir.join("solution.csv")).unwrap();
    assert!(sol.starts_with("t,x,l,i\n"));
    let s: serde_json::Value =
        serde_json::from_slice(&summary(tmp.path(), "skorohod-solve", 7)).unwrap();
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["pass"], true);
}

#[test]
fn identical_config_gives_byte_identical_summary() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    // small Monte Carlo run, different thread counts on the two runs
    let args = |out: &str, threads: &str| {
        vec![
            "verify-crossing-rate".to_string(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            out.to_string(),
            "--threads".into(),
            threads.to_string(),
            "--set".into(),
            "cases=[[0.0,4,0.001,20.0]]".into(),
            "--set".into(),
            "rel_tol=1.0".into(),
        ]
    };
    let a = bin()
        .args(args(tmp_a.path().to_str().unwrap(), "1"))
        .output()
        .unwrap();
    let b = bin()
        .args(args(tmp_b.path().to_str().unwrap(), "2"))
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0), "{}", String::from_utf8_lossy(&b.stderr));
    let sa = summary(tmp_a.path(), "verify-crossing-rate", 11);
    let sb = summary(tmp_b.path(), "verify-crossing-rate", 11);
    assert_eq!(sa, sb, "summaries differ between runs/thread counts");
}

#[test]
fn missing_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&["verify-linf", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn unknown_param_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&[
        "verify-linf",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "no_such_knob=3",
    ]);
    assert_eq!(st.status.code(), Some(2), "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn unknown_config_field_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"experiment":"verify-linf","seed":1,"surprise":true}"#,
    )
    .unwrap();
    let st = run(&[
        "verify-linf",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn experiment_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"schema_version":1,"experiment":"verify-linf","seed":1}"#,
    )
    .unwrap();
    let st = run(&[
        "verify-scaling",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&[
        "skorohod-solve",
        "--seed",
        "1",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "driver=\"ramp\"",
        "--set",
        "mu=\"neg-quadratic\"",
        "--set",
        "horizon=1.6",
        "--set",
        "dt=0.0001",
        "--set",
        "l_cap=50.0",
    ]);
    assert_eq!(st.status.code(), Some(3), "{}", String::from_utf8_lossy(&st.stderr));
}

#[test]
fn failed_check_exits_four() {
    let tmp = tempfile::tempdir().unwrap();
    // a tiny sample cannot meet the shipped KS tolerance
    let st = run(&[
        "verify-linf",
        "--seed",
        "3",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "n_paths=200",
        "--set",
        "horizon=5.0",
        "--set",
        "dt=0.01",
    ]);
    assert_eq!(st.status.code(), Some(4), "{}", String::from_utf8_lossy(&st.stderr));
    let s: serde_json::Value =
        serde_json::from_slice(&summary(tmp.path(), "verify-linf", 3)).unwrap();
    assert_eq!(s["pass"], false);
    assert!(tmp
        .path()
        .join("verify-linf-seed3")
        .join("ecdf.csv")
        .exists());
}

#[test]
fn solve_nd_emits_nd_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&[
        "solve-nd",
        "--seed",
        "5",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "horizon=0.5",
    ]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let nd = fs::read_to_string(tmp.path().join("solve-nd-seed5").join("nd.csv")).unwrap();
    assert!(nd.starts_with("t,x_1,x_2,l_1,l_2,abs_l\n"));
}

#[test]
fn simulate_subcommands_emit_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&[
        "simulate-interval",
        "--seed",
        "9",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "horizon=0.5",
    ]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let t = fs::read_to_string(
        tmp.path()
            .join("simulate-interval-seed9")
            .join("trajectory.csv"),
    )
    .unwrap();
    assert!(t.starts_with("t,x,y0,v,l0,ll\n"));

    let st = run(&[
        "simulate-three",
        "--seed",
        "9",
        "--out",
        tmp.path().to_str().unwrap(),
        "--set",
        "horizon=0.5",
    ]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let t = fs::read_to_string(
        tmp.path()
            .join("simulate-three-seed9")
            .join("trajectory.csv"),
    )
    .unwrap();
    assert!(t.starts_with("t,x1,x2,y,v,l1,l2\n"));
    let g = fs::read_to_string(tmp.path().join("simulate-three-seed9").join("gaps.csv")).unwrap();
    assert!(g.starts_with("gap,T\n"));
}

#[test]
fn verify_escape_tabulates_both_variants() {
    let tmp = tempfile::tempdir().unwrap();
    let st = run(&["verify-escape", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let s = fs::read_to_string(
        tmp.path()
            .join("verify-escape-seed0")
            .join("survival.csv"),
    )
    .unwrap();
    assert!(s.starts_with("tau,consistent,negative_part\n"));
}
