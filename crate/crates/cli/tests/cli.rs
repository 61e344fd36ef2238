use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrm")).args(args).output().expect("spawn rrm")
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_every_preset() {
    for name in ["tiny.json", "s1.json", "s5.json", "s6.json"] {
        let o = rrm(&["validate", preset(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(": ok"));
    }
}

#[test]
fn validate_rejects_bad_values_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(preset("tiny.json")).unwrap().replace("\"realizations\": 3", "\"realizations\": 0");
    let path = dir.path().join("bad.json");
    std::fs::write(&path, text).unwrap();
    let o = rrm(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_spec_is_an_error() {
    let o = rrm(&["run", "/nonexistent/spec.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrm(&[
        "run",
        preset("tiny.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--algorithms",
        "LB,UB,RnP1",
        "--realizations",
        "2",
        "--allow-failures",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for suffix in ["records.csv", "failures.csv", "summary.json", "timings.csv"] {
        assert!(dir.path().join(format!("tiny_{suffix}")).exists(), "missing {suffix}");
    }
    let records = std::fs::read_to_string(dir.path().join("tiny_records.csv")).unwrap();
    assert!(records.lines().count() >= 1 + 2 * 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tiny_summary.json")).unwrap()).unwrap();
    assert!(summary.is_array() || summary.is_object());
}

#[test]
fn unknown_algorithm_is_rejected() {
    let o = rrm(&["run", preset("tiny.json").to_str().unwrap(), "--algorithms", "Magic"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_agrees_on_the_tiny_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = rrm(&["oracle", preset("tiny.json").to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(!stdout(&o).contains("DIFFER"));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tiny_oracle.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r["agree"] == true));
}

#[test]
fn slotted_requires_settings() {
    let o = rrm(&["slotted", preset("tiny.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
