//! The command-line tool end to end: files written, replay agreement, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selforg"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_three_files_and_replay_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", s(&scenario("leader")), "--out", s(dir.path()), "--horizon", "800"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trace.jsonl", "report.jsonl", "summary.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let report = std::fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), report);

    let replay = run(&["replay", s(&dir.path().join("trace.jsonl"))]);
    assert!(replay.status.success());
    assert_eq!(String::from_utf8(replay.stdout).unwrap(), report);

    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let replay_csv = run(&["replay", s(&dir.path().join("trace.jsonl")), "--format", "csv-summary"]);
    assert_eq!(String::from_utf8(replay_csv.stdout).unwrap(), csv);
    assert!(csv.starts_with(selforg::engine::report::CSV_HEADER));
}

#[test]
fn seed_and_horizon_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", s(&scenario("lsa")), "--out", s(dir.path()), "--seed", "41", "--horizon", "50"]);
    assert!(out.status.success());
    let first = std::fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    let run_line: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(run_line["seed"], 41);
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert!(trace.lines().count() <= 51 + 50);
}

#[test]
fn snapshot_interval_controls_snapshot_lines() {
    let dir = tempfile::tempdir().unwrap();
    let can = scenario("can");
    let args = |k: &'static str| ["run", s(&can), "--out", s(dir.path()), "--horizon", "60", "--snapshot-interval", k];
    assert!(run(&args("0")).status.success());
    let none = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert!(!none.contains("\"type\":\"snapshot\""));
    assert!(run(&args("10")).status.success());
    let some = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    let actions = some.lines().filter(|l| l.contains("\"type\":\"action\"")).count();
    let snaps = some.lines().filter(|l| l.contains("\"type\":\"snapshot\"")).count();
    assert_eq!(snaps, actions / 10);
}

#[test]
fn expect_gates_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let adv = run(&["demo-theorem1", "--horizon", "600", "--out", s(dir.path())]);
    assert!(adv.status.success(), "{}", String::from_utf8_lossy(&adv.stdout));
    let trace = dir.path().join("trace.jsonl");
    let weak = run(&["replay", s(&trace), "--expect", "weak"]);
    assert_eq!(weak.status.code(), Some(0));
    let strong = run(&["replay", s(&trace), "--expect", "strong"]);
    assert_eq!(strong.status.code(), Some(2));
}

#[test]
fn tampered_trace_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["run", s(&scenario("query")), "--out", s(dir.path()), "--horizon", "40"]).status.success());
    let path = dir.path().join("trace.jsonl");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines.swap(1, 2);
    std::fs::write(&path, lines.join("\n")).unwrap();
    let out = run(&["replay", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn validate_reports_schedule_and_rejects_bad_files() {
    let out = run(&["validate", s(&scenario("pastry"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("satisfies the Finite demon: true"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("can")).unwrap().replace("[demon]", "typo = true\n[demon]");
    std::fs::write(&bad, text).unwrap();
    let out = run(&["validate", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo"));
}
