//! CLI behavior: exit codes, error objects, report files.

use std::path::Path;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_latentforest")
}

fn write_toy_data(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let data = dir.join("toy.csv");
    let schema = dir.join("schema.toml");
    let mut csv = String::from("x,y,label\n");
    for i in 0..80 {
        let minority = i % 5 == 0;
        let a = i as f64 * 0.1 + if minority { 6.0 } else { 0.0 };
        let b = (i % 7) as f64;
        csv.push_str(&format!("{a},{b},{}\n", u8::from(minority)));
    }
    std::fs::write(&data, csv).unwrap();
    std::fs::write(&schema, "target = \"label\"\n").unwrap();
    (data, schema)
}

#[test]
fn augment_writes_report_and_synthetic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = write_toy_data(dir.path());
    let out = dir.path().join("out");
    let output = Command::new(bin())
        .args(["augment", "--method", "smote", "--ratio", "50"])
        .arg("--data")
        .arg(&data)
        .arg("--schema")
        .arg(&schema)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "1", "--rf-estimators", "10", "--gbt-estimators", "10"])
        .output()
        .unwrap();
    assert!(output.status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let det = &report["deterministic"];
    assert_eq!(det["schema_version"], 1);
    assert_eq!(det["command"], "augment");
    assert_eq!(det["config"]["method"], "smote");
    assert_eq!(det["config"]["seed"], 1);
    assert_eq!(det["metrics"]["metric_space"], "raw");
    assert!(det["library_version"].is_string());
    assert!(report["timings"]["total_s"].as_f64().unwrap() >= 0.0);

    // 16 minority -> 11 train -> floor(0.5 * 11) = 5 synthetic rows
    assert_eq!(det["synthetic_count"], 5);
    let synth = std::fs::read_to_string(out.join("synthetic.csv")).unwrap();
    assert_eq!(synth.lines().next().unwrap(), "x,y,label");
    assert_eq!(synth.lines().count(), 1 + 5);
    for line in synth.lines().skip(1) {
        assert!(line.ends_with(",1"));
    }
}

#[test]
fn missing_file_gives_machine_readable_error_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.toml");
    std::fs::write(&schema, "target = \"label\"\n").unwrap();
    let output = Command::new(bin())
        .args(["augment", "--method", "smote", "--data", "/nonexistent.csv"])
        .arg("--schema")
        .arg(&schema)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["error"]["kind"], "io");
    assert!(err["error"]["message"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn header_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "a,b\n1,2\n").unwrap();
    let schema = dir.path().join("s.toml");
    std::fs::write(&schema, "target = \"label\"\n").unwrap();
    let output = Command::new(bin())
        .args(["augment", "--method", "smote"])
        .arg("--data")
        .arg(&data)
        .arg("--schema")
        .arg(&schema)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["error"]["kind"], "header_mismatch");
}

#[test]
fn sweep_csv_has_one_line_per_ratio_per_classifier() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = write_toy_data(dir.path());
    let out = dir.path().join("out");
    let output = Command::new(bin())
        .args(["sweep", "--method", "smote", "--ratios", "25,50,75"])
        .arg("--data")
        .arg(&data)
        .arg("--schema")
        .arg(&schema)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "2", "--rf-estimators", "10", "--gbt-estimators", "10"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["deterministic"]["ratios"], serde_json::json!([25, 50, 75]));
}

#[test]
fn evaluate_rejects_mismatched_columns() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "x,y\n1,2\n3,4\n").unwrap();
    std::fs::write(&b, "x\n1\n2\n").unwrap();
    let output = Command::new(bin())
        .args(["evaluate"])
        .arg("--real")
        .arg(&a)
        .arg("--synthetic")
        .arg(&b)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stderr).unwrap().trim()).unwrap();
    assert_eq!(err["error"]["kind"], "shape_mismatch");
}

#[test]
fn usage_errors_exit_2() {
    let output = Command::new(bin()).args(["augment"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
