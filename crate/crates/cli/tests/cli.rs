use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn quipu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quipu")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("quipu-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn build_exit_codes_follow_the_result() {
    for (file, code, label) in [("ex1.json", 0, "halt"), ("grid1.json", 2, "grid"), ("bad1.json", 4, "not-confluent")] {
        let out = quipu(&["build", fixture(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(code), "{file}");
        let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(doc["result"], label);
        assert_eq!(doc["metadata"]["soundness"], "window-sound");
    }
}

#[test]
fn tiny_cap_is_inconclusive() {
    let out = quipu(&["build", fixture("ex1.json").to_str().unwrap(), "--cap", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"], "inconclusive");
    assert!(doc["reason"].is_string());
}

#[test]
fn built_quipu_verifies() {
    let dir = scratch("verify");
    let doc = dir.join("ex1.json");
    let dot = dir.join("ex1.dot");
    let tas = fixture("ex1.json");
    let out = quipu(&["build", tas.to_str().unwrap(), "--out", doc.to_str().unwrap(), "--dot", dot.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let out = quipu(&["verify", tas.to_str().unwrap(), doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["equal"], true);
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn truncated_quipu_fails_verification() {
    let dir = scratch("mismatch");
    let doc = dir.join("root.json");
    std::fs::write(&doc, r#"{"vertices":[{"id":0,"tile":"Σ","zone":"Z0"}],"arcs":[],"root":0,"covers":[]}"#).unwrap();
    let out = quipu(&["verify", fixture("ex1.json").to_str().unwrap(), doc.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn confluence_check_reports_the_clash() {
    let out = quipu(&["check-confluence", fixture("bad1.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let w: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(w, serde_json::json!({"point": [0, 1], "tiles": ["B", "D"]}));
    assert_eq!(quipu(&["check-confluence", fixture("ex1.json").to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn simulate_draws_svg() {
    let dir = scratch("svg");
    let svg = dir.join("ex1.svg");
    let out =
        quipu(&["simulate", fixture("ex1.json").to_str().unwrap(), "--window", "3", "--svg", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains(">Σ</text>"));
    let _ = std::fs::remove_dir_all(dir);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(quipu(&["bogus"]).status.code(), Some(1));
    assert_eq!(quipu(&["build"]).status.code(), Some(1));
    assert_eq!(quipu(&["build", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(quipu(&["build", fixture("ex1.json").to_str().unwrap(), "--order", "SEW"]).status.code(), Some(1));
    assert_eq!(quipu(&["--help"]).status.code(), Some(0));
}
