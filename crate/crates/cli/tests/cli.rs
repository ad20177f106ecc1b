use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpsynth::tabular::{
    generate_classification_data, load_csv, save_csv, SchemaFile, SyntheticTaskSpec,
};

fn dpsynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsynth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small generated task as `data.csv` + `schema.json`.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = SyntheticTaskSpec {
        n_samples: 300,
        n_features: 3,
        n_classes: 3,
        n_informative: 2,
        class_separation: 1.5,
        seed: 4,
        bins: 4,
    };
    let d = generate_classification_data(&spec).unwrap();
    let data = dir.join("data.csv");
    let schema = dir.join("schema.json");
    save_csv(&d, &data).unwrap();
    let file = SchemaFile {
        columns: d.schema().columns().to_vec(),
        target: Some("y".into()),
    };
    std::fs::write(&schema, serde_json::to_string(&file).unwrap()).unwrap();
    (data, schema)
}

fn synth_args<'a>(data: &'a Path, schema: &'a Path, out: &'a Path, epsilon: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "synth", "--schema", s(schema), "--data", s(data), "--epsilon", epsilon, "--n", "57",
        "--seed", seed, "--out", s(out), "--iterations", "8", "--queries", "40",
    ]
}

#[test]
fn synth_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let out = dir.path().join("synth.csv");
    let o = dpsynth(&synth_args(&data, &schema, &out, "1.0", "3"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let file = SchemaFile::load(&schema).unwrap();
    let d = load_csv(&out, &file.schema().unwrap(), Some("y")).unwrap();
    assert_eq!(d.n_rows(), 57);
}

#[test]
fn synth_rejects_zero_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let out = dir.path().join("synth.csv");
    let o = dpsynth(&synth_args(&data, &schema, &out, "0", "3"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("epsilon"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn synth_same_seed_same_file() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(code(&dpsynth(&synth_args(&data, &schema, &a, "2.0", "11"))), 0);
    assert_eq!(code(&dpsynth(&synth_args(&data, &schema, &b, "2.0", "11"))), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn synth_missing_input_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let (_, schema) = fixture(dir.path());
    let missing = dir.path().join("nope.csv");
    let out = dir.path().join("out.csv");
    let o = dpsynth(&synth_args(&missing, &schema, &out, "1.0", "0"));
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

fn quail_args<'a>(data: &'a Path, schema: &'a Path, out: &'a Path, split: &'a str) -> Vec<&'a str> {
    vec![
        "quail", "--schema", s(schema), "--data", s(data), "--target", "y", "--epsilon", "3.0",
        "--split", split, "--n", "120", "--seed", "5", "--out", s(out), "--iterations", "8",
        "--queries", "40",
    ]
}

#[test]
fn quail_writes_rows_and_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let out = dir.path().join("quail.csv");
    let o = dpsynth(&quail_args(&data, &schema, &out, "0.7"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let file = SchemaFile::load(&schema).unwrap();
    let d = load_csv(&out, &file.schema().unwrap(), Some("y")).unwrap();
    assert_eq!(d.n_rows(), 120);
    assert_eq!(d.schema().names(), vec!["x0", "x1", "x2", "y"]);

    let ledger_file = dir.path().join("quail.csv.ledger.json");
    let ledger: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ledger_file).unwrap()).unwrap();
    let m = ledger["epsilon_synthesizer"].as_f64().unwrap();
    let c = ledger["epsilon_classifier"].as_f64().unwrap();
    assert!((m - 2.1).abs() < 1e-12, "{m}");
    assert!((c - 0.9).abs() < 1e-12, "{c}");
    assert_eq!(m + c, 3.0);
    assert_eq!(ledger["spent_epsilon"].as_f64(), Some(3.0));
    assert_eq!(ledger["spends"].as_array().unwrap().len(), 2);
}

#[test]
fn quail_split_bounds_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let out = dir.path().join("quail.csv");
    for split in ["1.0", "0", "-0.2"] {
        let o = dpsynth(&quail_args(&data, &schema, &out, split));
        assert_eq!(code(&o), 2, "split {split}: {}", stderr(&o));
    }
}

fn write_plan(dir: &Path, data: &Path, schema: &Path, synthesizers: &str, epsilons: &str) -> PathBuf {
    let plan = format!(
        r#"{{"dataset": {{"csv": {{"data": {:?}, "schema": {:?}}}}},
            "synthesizers": {synthesizers},
            "epsilons": {epsilons},
            "runs": 1,
            "seed": 3}}"#,
        s(data),
        s(schema)
    );
    let path = dir.join("plan.json");
    std::fs::write(&path, plan).unwrap();
    path
}

#[test]
fn bench_tiny_plan() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let plan = write_plan(dir.path(), &data, &schema, r#"[{"kind": "mwem", "iterations": 8}]"#, "[0.5, 2.0]");
    let out = dir.path().join("report");
    let o = dpsynth(&["bench", s(&plan), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "summary.csv", "plot_best_f1.csv", "plot_best_auc.csv", "plot_pmse_ratio.csv", "plot_sra.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn bench_rejects_bad_epsilons() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let out = dir.path().join("report");
    for eps in ["[2.0, 1.0]", "[0.0]", "[]"] {
        let plan = write_plan(dir.path(), &data, &schema, r#"[{"kind": "mwem"}]"#, eps);
        let o = dpsynth(&["bench", s(&plan), "--out", s(&out)]);
        assert_eq!(code(&o), 2, "{eps}: {}", stderr(&o));
    }
    assert!(!out.exists());
    let plan = write_plan(dir.path(), &data, &schema, r#"[{"kind": "mwem"}]"#, "[1.0]");
    let o = dpsynth(&["bench", s(&plan), "--epsilons", "1,-3", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_failing_cell_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = fixture(dir.path());
    let plan = write_plan(
        dir.path(),
        &data,
        &schema,
        r#"[{"kind": "identity"}, {"kind": "mwem", "name": "capped", "max_cells": 2}]"#,
        "[1.0]",
    );
    let out = dir.path().join("report");
    let o = dpsynth(&["bench", s(&plan), "--out", s(&out)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let failed: Vec<&serde_json::Value> = report["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["status"] == "failed")
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["synthesizer"], "capped");
    assert!(failed[0]["error"].as_str().unwrap().contains("cap"), "{}", failed[0]["error"]);
}

#[test]
fn sweep_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("grid");
    let o = dpsynth(&[
        "quail-sweep", "--epsilon", "2", "--splits", "0.5", "--sizes", "600", "--runs", "1", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("delta_grid_eps2.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("split,600"));
    let grid: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("delta_grid_eps2.json")).unwrap()).unwrap();
    assert_eq!(grid["cells"][0][0]["run_count"], 1);
}

#[test]
fn sweep_rejects_empty_splits() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpsynth(&["quail-sweep", "--splits", "", "--runs", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_jobs_is_invalid() {
    let o = dpsynth(&["--jobs", "0", "quail-sweep", "--runs", "1", "--out", "unused"]);
    assert_eq!(code(&o), 2);
}
