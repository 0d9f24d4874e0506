use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ies(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ies"))
        .args(args)
        .env_remove("IES_CASE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/cases/default.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_case(dir: &Path, name: &str, case: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(case).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_bundled_and_file_cases() {
    let o = ies(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("bundled:default: 0 errors"));

    let dir = tempfile::tempdir().unwrap();
    let good = write_case(dir.path(), "good.json", &bundled());
    assert_eq!(ies(&["validate", "--case", s(&good)]).status.code(), Some(0));

    let mut bad = bundled();
    bad["carbon"]["interval_d"] = Value::from(-5.0);
    let bad = write_case(dir.path(), "bad.json", &bad);
    let o = ies(&["validate", "--case", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("carbon.interval_d"), "{}", stdout(&o));
}

#[test]
fn case_directory_lookup() {
    let dir = tempfile::tempdir().unwrap();
    write_case(dir.path(), "mine.json", &bundled());
    let o = Command::new(env!("CARGO_BIN_EXE_ies"))
        .args(["validate", "--case", "mine"])
        .env("IES_CASE_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = ies(&["validate", "--case", "mine"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("IES_CASE_DIR"));
}

#[test]
fn usage_errors_exit_one_with_a_hint() {
    for args in [&["solve", "--bogus"][..], &["sweep", "--param", "mu"][..], &["frobnicate"][..]] {
        let o = ies(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("hint: run `ies --help`"), "{}", stderr(&o));
    }
    assert_eq!(ies(&["--help"]).status.code(), Some(0));
    assert_eq!(ies(&["solve", "--reduced", "--gap", "-1"]).status.code(), Some(1));
    let o = ies(&["solve", "--reduced", "--scenario", "S9"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn solve_writes_outputs_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let o = ies(&["solve", "--reduced", "--scenario", "S5", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("S5: status optimal"), "{text}");
    assert!(text.contains("verification PASS"));

    let sol: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution_S5.json")).unwrap()).unwrap();
    assert!(sol.is_object());
    let csv = std::fs::read_to_string(dir.path().join("schedule_S5.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "solve");
    assert_eq!(meta["scenario"], "S5");
    assert_eq!(meta["reduced"], true);
    assert_eq!(meta["solver"]["backend"], "embedded");
    let hash = meta["case_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);

    // Same case from a file hashes the same.
    let other = tempfile::tempdir().unwrap();
    let path = write_case(other.path(), "copy.json", &bundled());
    let o = ies(&["solve", "--reduced", "--case", s(&path), "--scenario", "S1", "--out", s(other.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(other.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["case_sha256"].as_str(), Some(hash.as_str()));
}

#[test]
fn infeasible_case_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut case = bundled();
    case["loads"]["heat"][0] = Value::from(1e5);
    let path = write_case(dir.path(), "hot.json", &case);
    let o = ies(&["solve", "--case", s(&path), "--scenario", "S3", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("heat balance"), "{}", stderr(&o));
}

#[test]
fn scenarios_and_sweep_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = ies(&["scenarios", "--reduced", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("S5 vs S1: total cost down"));
    let csv = std::fs::read_to_string(dir.path().join("scenarios.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);

    let o = ies(&["sweep", "--reduced", "--param", "lambda", "--grid", "0.1:0.3:0.1", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep_lambda.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{csv}");
    assert!(rows[2].starts_with("0.300000,optimal,"));
    assert_eq!(ies(&["sweep", "--reduced", "--param", "d", "--grid", "5:1:1"]).status.code(), Some(1));
}

#[test]
fn exported_lp_solves_to_the_same_objective() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("s2.lp");
    let o = ies(&["export-lp", "--reduced", "--scenario", "S2", "--out", s(&lp)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = ies(&["solve-lp", s(&lp)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let from_lp: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("objective="))
        .unwrap()
        .parse()
        .unwrap();

    let o = ies(&["solve", "--reduced", "--scenario", "S2", "--gap", "1e-6", "--out", s(dir.path())]);
    let direct: f64 = stdout(&o)
        .split_whitespace()
        .skip_while(|w| *w != "objective")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((from_lp - direct).abs() <= 1e-5 * direct.abs(), "{from_lp} vs {direct}");

    let o = ies(&["solve-lp", s(&dir.path().join("missing.lp"))]);
    assert_eq!(o.status.code(), Some(1));
}
