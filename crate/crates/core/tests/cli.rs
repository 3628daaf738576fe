use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn riggedframes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riggedframes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn without_timing(mut report: Value) -> Value {
    report.as_object_mut().unwrap().remove("timing");
    report
}

#[test]
fn classify_dirac_reports_gelfand_basis() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"map": {"kind": "dirac"}, "ladder": {"stages": [8, 16, 32]}}"#);
    let out = riggedframes(&["classify", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let labels: Vec<&str> = report["labels"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(labels.contains(&"gelfand_basis"), "{labels:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    let offsets: Vec<usize> = ["\"config\"", "\"stages\"", "\"labels\"", "\"dual\"", "\"moment\""]
        .iter()
        .map(|key| text.find(&format!("\n  {key}")).unwrap())
        .collect();
    assert!(offsets.windows(2).all(|w| w[0] < w[1]), "{offsets:?}");
}

#[test]
fn demo_passes_every_check() {
    let out = riggedframes(&["demo"]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(0), "{stderr}");
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS")).count(), 10, "{stderr}");
}

#[test]
fn malformed_weight_fails_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"map": {"kind": "weighted_dirac", "weight": "sin("}}"#);
    let out = riggedframes(&["bounds", "--config", &config]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("map.weight"), "{stderr}");
    assert!(stderr.contains("offset 4"), "{stderr}");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"map": {"kind": "dirac"}, "stagez": 3}"#);
    let out = riggedframes(&["bounds", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"map": {"kind": "weighted_dirac", "weight": "2+sin(x)"}, "ladder": {"stages": [8, 16]}, "trials": 4}"#,
    );
    let run = || {
        let out = riggedframes(&["reconstruct", "--config", &config, "--seed", "7"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        without_timing(serde_json::from_slice(&out.stdout).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn csv_output_has_one_row_per_stage() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.csv");
    let out = riggedframes(&[
        "bounds",
        "--stages",
        "8,16,32",
        "--format",
        "csv",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&target).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("N,L,nodes,A,B,sigma_min,sigma_max,total,mu_independent"));
}
