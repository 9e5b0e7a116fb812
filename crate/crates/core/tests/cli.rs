#![cfg(feature = "cli")]

use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::Command;

use tmpc::sim_bench::{BatchReport, RunTrace, ScenarioConfig, TRACE_SCHEMA_VERSION};

fn tmpc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tmpc")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name).to_string_lossy().into_owned()
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ScenarioConfig::from_toml(&fs::read_to_string(&path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}

#[test]
fn run_writes_a_readable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let out = tmpc(&["run", "--pedestrians", "3", "--max-steps", "5", "--seed", "2", "--trace", trace.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = RunTrace::read_jsonl(BufReader::new(fs::File::open(&trace).unwrap())).unwrap();
    assert_eq!(t.header.version, TRACE_SCHEMA_VERSION);
    assert_eq!((t.header.seed, t.steps.len()), (2, 5));
    assert!(t.steps.iter().all(|s| s.decision.is_some()));
}

#[test]
fn batch_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = tmpc(&["batch", "--scenario", &scenario("corridor.toml"), "--max-steps", "4", "--seeds", "0..2", "--modes", "t-mpc++,local-only", "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(table.contains("t-mpc++") && table.contains("local-only"));
    assert_eq!(String::from_utf8_lossy(&out.stdout), table);
    let report: BatchReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report.runs.len(), 4);
    let csv = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(fs::read_to_string(dir.path().join("runs.csv")).unwrap().lines().count(), 5);
}

#[test]
fn sweep_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = tmpc(&["sweep", "paths", "--values", "0,2", "--pedestrians", "4", "--max-steps", "3", "--seeds", "0", "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: BatchReport = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report.summary("P=0").is_some() && report.summary("P=2").is_some());
    let out = tmpc(&["audit", "--pedestrians", "4", "--max-steps", "3", "--seeds", "0..2", "--out", out_dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(dir.path().join("audit.csv")).unwrap().lines().count(), 7);
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "pedestrians = 3\nbogus = 1\n").unwrap();
    let out = tmpc(&["run", "--scenario", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    fs::write(&bad, "[planner]\nbeta = 2.0\n").unwrap();
    assert!(!tmpc(&["run", "--scenario", bad.to_str().unwrap()]).status.success());
    assert!(!tmpc(&["batch", "--seeds", "3..1"]).status.success());
}
