//! End-to-end runs of the `ergomix` binary.

use std::fs;
use std::process::Command;

use serde_json::Value;

fn ergomix(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ergomix"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

#[test]
fn json_goes_to_stdout_without_out() {
    let (code, stdout, _) = ergomix(&["analyze-system", "swap"]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["verdicts"]["ergodic"]["verdict"], "yes");
    assert_eq!(report["verdicts"]["weak_mixing"]["verdict"], "no");
    assert_eq!(report["metadata"]["tool"], "ergomix");
}

#[test]
fn config_file_with_inline_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cycle.json");
    fs::write(
        &cfg,
        r#"{
  "scenario": "analyze-system",
  "object": { "matrix": [[0, 1, 0], [0, 0, 1], [1, 0, 0]] },
  "x": [1, 0, 0]
}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let (code, stdout, _) = ergomix(&[
        "analyze-system",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());

    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["ergodic"]["verdict"], "yes");
    assert_eq!(report["verdicts"]["weak_mixing"]["verdict"], "no");

    let deviation = fs::read_to_string(out.join("deviation.csv")).unwrap();
    assert!(deviation.starts_with("n,deviation\n"));
    assert!(!deviation.contains('\r'));
    // three-cycle: |φ(T^k e_1) − 1/3| averages to 4/9 over each period
    let last: Vec<&str> = deviation.lines().last().unwrap().split(',').collect();
    let n: f64 = last[0].parse().unwrap();
    let d: f64 = last[1].parse().unwrap();
    assert!((d - 4.0 / 9.0).abs() <= 1.0 / n, "{d}");
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"scenario\": \"analyze-system\",\n  \"bogus\": 1\n}").unwrap();
    let (code, _, stderr) = ergomix(&["analyze-system", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");

    let (code, _, _) = ergomix(&["analyze-system", "not_a_system"]);
    assert_eq!(code, 1);
    let (code, _, _) = ergomix(&["analyze-system", "--matrix-typo"]);
    assert_ne!(code, 0);
}

#[test]
fn strict_undecided_exits_two() {
    let (code, _, _) = ergomix(&[
        "analyze-sequence",
        "orbit",
        "system=T31",
        "horizon=50",
        "--grid",
        "10,20",
        "--strict",
    ]);
    assert_eq!(code, 2);
    let (code, _, _) = ergomix(&[
        "analyze-sequence",
        "orbit",
        "system=T31",
        "horizon=50",
        "--grid",
        "10,20",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn catalog_list_names_every_entry() {
    let (code, stdout, _) = ergomix(&["catalog", "list"]);
    assert_eq!(code, 0);
    let mut reader = csv::Reader::from_reader(stdout.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["name", "kind", "params", "locator"]);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let names: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    for want in [
        "block_counterexample",
        "orbit",
        "T31",
        "H31",
        "swap",
        "P33",
        "random",
        "P33_swap",
    ] {
        assert!(names.contains(&want), "{want} missing from {names:?}");
    }
}
