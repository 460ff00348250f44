#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn qsqs(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_qsqs"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two same-class boxes at IoU 0.5: a short front box and a tall one behind it.
pub const OCCLUSION: &str = r#"{"format_version": 1, "images": [{"image_id": "a", "detections": [
  {"bbox": [0, 0, 10, 10], "score": 0.9, "class_id": 0},
  {"bbox": [0, 0, 10, 20], "score": 0.6, "class_id": 0}]}]}"#;

pub const TWO_OBJECTS: &str = r#"{"format_version": 1, "images": [{"image_id": "a", "objects": [
  {"bbox": [0, 0, 10, 10], "class_id": 0},
  {"bbox": [20, 0, 30, 10], "class_id": 0}]}]}"#;

/// True positive, false positive, true positive in descending score order.
pub const TP_FP_TP: &str = r#"{"format_version": 1, "images": [{"image_id": "a", "detections": [
  {"bbox": [0, 0, 10, 10], "score": 0.9, "class_id": 0},
  {"bbox": [100, 100, 110, 110], "score": 0.8, "class_id": 0},
  {"bbox": [20, 0, 30, 10], "score": 0.7, "class_id": 0}]}]}"#;

pub const PERFECT: &str = r#"{"format_version": 1, "images": [{"image_id": "a", "detections": [
  {"bbox": [0, 0, 10, 10], "score": 0.9, "class_id": 0},
  {"bbox": [20, 0, 30, 10], "score": 0.8, "class_id": 0}]}]}"#;

pub const NO_OBJECTS: &str = r#"{"format_version": 1, "images": [{"image_id": "a", "objects": []}]}"#;

pub fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}
