use std::path::Path;
use std::process::{Command, Output};

use oddlift_cli::{parse_scenario, run_scenario, CliError};
use serde_json::Value;

fn oddlift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oddlift")).args(args).output().unwrap()
}

fn scenario_file(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SPHERE: &str = r#"{"spec_version": "1", "command": "verify-identity",
  "params": {"identity": "sphere", "alpha": 1, "beta": 1, "r": 1, "gamma": 1}}"#;

#[test]
fn sphere_scenario_reports_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(dir.path(), "s.json", SPHERE);
    let out = oddlift(&["--scenario", &path]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rhs = report["result"]["rhs"].as_f64().unwrap();
    assert!((rhs - 2.5132741).abs() < 1e-7);
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["quadrature"]["core_nodes"], 16);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.json", r#"{"spec_version": "1","#),
        ("version.json", r#"{"spec_version": "0", "command": "symbol", "params": {}}"#),
        ("top.json", r#"{"spec_version": "1", "command": "symbol", "params": {}, "extra": 1}"#),
        ("command.json", r#"{"spec_version": "1", "command": "plot"}"#),
        ("params.json", r#"{"spec_version": "1", "command": "symbol", "params": {"kernel": {"family": "gaussian", "n": 1}, "taus": 3}}"#),
        ("quad.json", r#"{"spec_version": "1", "command": "symbol", "params": {"kernel": {"family": "gaussian", "n": 1}}, "quadrature": {"core_nodes": 0}}"#),
        ("field.json", r#"{"spec_version": "1", "command": "verify-identity", "params": {"identity": "norm", "s": 0.5, "field": "nope"}}"#),
        ("positivity.json", r#"{"spec_version": "1", "command": "harnack", "params": {"vtilde": "one", "C_budget": 2, "k": {"shape": {"lower": [-2], "upper": [0.5]}}}}"#),
    ];
    for (name, body) in cases {
        let path = scenario_file(dir.path(), name, body);
        let out = oddlift(&["--scenario", &path]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let out = oddlift(&["--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnostics_name_the_field() {
    let err = parse_scenario(r#"{"spec_version": "1", "command": "symbol", "bogus": 1}"#).unwrap_err();
    assert!(matches!(&err, CliError::Input(m) if m.contains("bogus")), "{err}");
    let s = parse_scenario(r#"{"spec_version": "1", "command": "verify-identity", "params": {"identity": "sphere", "alpha": 1, "beta": 1, "r": 1}}"#).unwrap();
    let err = run_scenario(&s, 1.0).unwrap_err();
    assert!(matches!(&err, CliError::Input(m) if m.contains("gamma")), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn tight_budget_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(dir.path(), "h.json", r#"{"spec_version": "1", "command": "harnack", "params": {"vtilde": "one", "C_budget": 0.5}}"#);
    let out = oddlift(&["--scenario", &path]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["sup", "inf", "ratio", "lifted_sup", "lifted_inf", "residual_max", "pass"] {
        assert!(report["result"].get(key).is_some(), "{key}");
    }
    assert_eq!(report["result"]["ratio"].as_f64(), Some(1.0));
}

#[test]
fn tolerance_scale_tightens_checks() {
    let s = parse_scenario(
        r#"{"spec_version": "1", "command": "verify-identity", "params": {"identity": "pairing", "u": "x1_gaussian", "g": "x1_bump"}}"#,
    )
    .unwrap();
    let loose = run_scenario(&s, 1.0).unwrap();
    assert!(loose.pass);
    let tight = run_scenario(&s, 1e-6).unwrap();
    assert!(!tight.pass && tight.exit_code() == 1);
    assert!(run_scenario(&s, 0.0).is_err());
}

#[test]
fn csv_output_and_sample_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario_file(
        dir.path(),
        "h.json",
        r#"{"spec_version": "1", "command": "harnack", "params": {"vtilde": "gaussian", "C_budget": 10}}"#,
    );
    let report = dir.path().join("report.csv");
    let samples = dir.path().join("samples.csv");
    let out = oddlift(&[
        "--scenario",
        &path,
        "--format",
        "csv",
        "--output",
        report.to_str().unwrap(),
        "--dump-samples",
        samples.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header.matches("pass").count(), 1);
    assert!(header.starts_with("C_budget,inf,"));
    let dump = std::fs::read_to_string(&samples).unwrap();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines[0], "x1,quotient");
    assert_eq!(lines.len(), 18);

    let sym = scenario_file(dir.path(), "s.json", SPHERE);
    let out = oddlift(&["--scenario", &sym, "--dump-samples", samples.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scenario_output_section_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let body = format!(
        r#"{{"spec_version": "1", "command": "lift-check", "params": {{"kernel": {{"family": "gaussian", "n": 2}}}},
          "output": {{"path": {:?}, "format": "csv"}}}}"#,
        target.to_str().unwrap()
    );
    let path = scenario_file(dir.path(), "l.json", &body);
    let out = oddlift(&["--scenario", &path]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("lifted,r,reference,relative_error,pass"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let s = parse_scenario(
        r#"{"spec_version": "1", "command": "symbol", "params": {"kernel": {"family": "fractional", "n": 1, "s": 0.25}}}"#,
    )
    .unwrap();
    let a = run_scenario(&s, 1.0).unwrap().render(oddlift_cli::Format::Json).unwrap();
    let b = run_scenario(&s, 1.0).unwrap().render(oddlift_cli::Format::Json).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"residual\": "));
}

#[test]
fn every_command_parses() {
    for (command, params) in [
        ("weak-harnack", r#"{"vtilde": "rational", "M": 1}"#),
        ("local-boundedness", r#"{"vtilde": "one", "operator": {"family": "gaussian"}}"#),
        ("mollifier", r#"{"eps": [0.2, 0.1], "final_ratio": 0.3}"#),
    ] {
        let s = parse_scenario(&format!(r#"{{"spec_version": "1", "command": "{command}", "params": {params}}}"#)).unwrap();
        let outcome = run_scenario(&s, 1.0).unwrap();
        assert!(outcome.pass, "{command}: {}", outcome.report);
    }
}
