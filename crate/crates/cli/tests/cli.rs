use std::path::Path;
use std::process::{Command, Output};

fn boneaxis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boneaxis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn phantoms(dir: &Path, count: &str) {
    let out = boneaxis(&["phantom", s(dir), "--count", count, "--seed", "11", "--noise", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn phantom_then_detect_writes_axis_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "2");
    let case = dir.path().join("phantom_0000");
    for f in ["mask_bone.png", "annotation.json", "truth.json"] {
        assert!(case.join(f).is_file(), "{f} missing");
    }
    let json = dir.path().join("axis.json");
    let png = dir.path().join("overlay.png");
    let out = boneaxis(&["detect", s(&case), "--json", s(&json), "--out", s(&png), "--d1", "20%", "--d2", "10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let axis: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let angle = axis["angle_deg"].as_f64().unwrap();
    assert!((0.0..180.0).contains(&angle));
    assert_eq!(axis["d2_px"].as_f64(), Some(10.0));
    let d = axis["direction"].as_array().unwrap();
    let norm = d.iter().map(|v| v.as_f64().unwrap().powi(2)).sum::<f64>();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!(std::fs::read(&png).unwrap().starts_with(b"\x89PNG"));
}

#[test]
fn evaluate_is_deterministic_and_flags_failures() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "4");
    let run = |format: &str| {
        let out = boneaxis(&["evaluate", s(dir.path()), "--report", format, "--seed", "3"]);
        (out.status.code(), out.stdout)
    };
    let (code, csv) = run("csv");
    assert_eq!(code, Some(0));
    assert_eq!(run("csv").1, csv);
    let (_, json) = run("json");
    assert_eq!(run("json").1, json);
    let report: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.lines().next().unwrap().starts_with("case,structure,status"));
    assert!(csv.lines().any(|l| l.starts_with("summary:median")));

    std::fs::write(dir.path().join("phantom_0001").join("annotation.json"), "[]").unwrap();
    assert_eq!(run("csv").0, Some(1));
}

#[test]
fn encode_roi_writes_map() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "1");
    let case = dir.path().join("phantom_0000");
    let roi = dir.path().join("roi.png");
    let out = boneaxis(&["encode-roi", s(&case.join("annotation.json")), "--label", "bone_ant", "--out", s(&roi)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(roi.is_file());
    let missing = boneaxis(&["encode-roi", s(&case.join("annotation.json")), "--label", "nope", "--out", s(&roi)]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn invalid_invocations_exit_2() {
    assert_eq!(boneaxis(&[]).status.code(), Some(2));
    assert_eq!(boneaxis(&["detect", "/nonexistent/case"]).status.code(), Some(2));
    assert_eq!(boneaxis(&["evaluate", "/nonexistent", "--report", "xml"]).status.code(), Some(2));
    assert_eq!(boneaxis(&["detect", ".", "--d1", "abc"]).status.code(), Some(2));
}

#[test]
fn failed_detection_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    phantoms(dir.path(), "1");
    let case = dir.path().join("phantom_0000");
    let out = boneaxis(&["detect", s(&case), "--d1", "10000", "--d2", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("construct"));
}
