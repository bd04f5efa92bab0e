use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn evsp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evsp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run evsp")
}

fn generate(dir: &Path, name: &str, trips: usize) {
    let out = evsp(
        &[
            "generate",
            "--seed",
            "3",
            "--trips",
            &trips.to_string(),
            "-o",
            name,
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generate_solve_validate_report() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 6);
    let out = evsp(
        &["solve", "inst.json", "-o", "sched.json", "--log", "log.csv"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("sched.json").exists());
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert!(log.starts_with("It,phase,PP,RMP,z"));
    assert!(log.lines().count() > 1);

    let out = evsp(&["validate", "inst.json", "sched.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("feasible"));

    let out = evsp(&["report", "inst.json", "sched.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("vehicles"));
}

#[test]
fn every_heuristic_runs() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 5);
    for h in ["pnb", "tpnb", "tcg"] {
        let out = evsp(
            &["solve", "inst.json", "--heuristic", h, "-o", "s.json"],
            dir.path(),
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{h}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = evsp(
        &[
            "solve",
            "inst.json",
            "--node-removal",
            "--threads",
            "2",
            "-o",
            "s.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unreachable_trip_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 4);
    let path = dir.path().join("inst.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // far longer than any battery can drive
    v["trips"][0]["distance_km"] = Value::from(5000.0);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = evsp(&["solve", "inst.json", "-o", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t1"));
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 10);
    let out = evsp(&["oracle", "inst.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    generate(dir.path(), "small.json", 4);
    let out = evsp(&["oracle", "small.json"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn bad_arguments_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 4);
    let out = evsp(&["solve", "inst.json", "--theta", "0.3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = evsp(&["solve", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = evsp(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lowerbound_writes_record() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "inst.json", 5);
    let out = evsp(&["lowerbound", "inst.json", "-o", "lb.json"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lb.json")).unwrap())
            .unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["exact"], Value::Bool(true));
}
