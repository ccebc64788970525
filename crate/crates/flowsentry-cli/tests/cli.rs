//! Behavioral tests for the `flowsentry` binary: exit codes, artifacts,
//! determinism, and the per-command contracts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flowsentry"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/flows_small.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// A larger synthetic CSV for commands that actually train.
fn write_synth_csv(dir: &Path, rows: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("synth_{seed}.csv"));
    let ds = flowsentry::synth::two_gaussians(rows, 6, 2.2, seed);
    flowsentry::flowdata::write_flow_csv(&ds, &path).unwrap();
    path
}

fn write_config(dir: &Path, data: &Path, out: &Path, extra_model: &str) -> PathBuf {
    let path = dir.join("config.json");
    let json = format!(
        r#"{{
  "data": ["{}"],
  "out": "{}",
  "seed": 11,
  "model": {{"family": "ann", "hidden_sizes": [16, 8]{extra_model}}},
  "train": {{"epochs": 8, "batch_size": 64, "dropout_rate": 0.1, "early_stop_patience": 0}},
  "preprocess": {{"normalization": "zscore", "top_k_features": 5}}
}}"#,
        data.display(),
        out.display()
    );
    std::fs::write(&path, json).unwrap();
    path
}

#[test]
fn inspect_reports_distribution_and_writes_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("inspect");
    let output = run(&[
        "inspect",
        "--data",
        fixture().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("benign"), "stdout: {stdout}");
    // fractions print with four decimals
    assert!(stdout.contains("(0."), "stdout: {stdout}");
    assert!(out.join("distribution.csv").exists());
    assert!(out.join("correlation.csv").exists());
    assert!(out.join("run_manifest.json").exists());
}

#[test]
fn inspect_missing_label_column_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("nolabel.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    let output = run(&["inspect", "--data", bad.to_str().unwrap()]);
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("Label"), "stderr: {stderr}");
    assert!(stderr.contains("columns"), "stderr: {stderr}");
}

#[test]
fn train_smoke_produces_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 400, 3);
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &data, &out, "");
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0);
    for file in [
        "metrics.json",
        "comparison.csv",
        "confusion_ann.csv",
        "roc_ann.csv",
        "history.csv",
        "distribution.csv",
        "correlation.csv",
        "run_manifest.json",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    assert!(out.join("model/manifest.json").exists());
    assert!(out.join("model/params.bin").exists());
    // input files are never mutated
    let before = std::fs::read(&data).unwrap();
    assert_eq!(before, std::fs::read(&data).unwrap());
}

#[test]
fn train_rerun_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 400, 4);
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let c1 = write_config(tmp.path(), &data, &out1, "");
    assert_exit(&run(&["train", "--config", c1.to_str().unwrap()]), 0);
    assert_exit(
        &run(&["train", "--config", c1.to_str().unwrap(), "--out", out2.to_str().unwrap()]),
        0,
    );
    let m1 = std::fs::read(out1.join("metrics.json")).unwrap();
    let m2 = std::fs::read(out2.join("metrics.json")).unwrap();
    assert_eq!(m1, m2, "metrics.json differs between identical runs");
    assert_eq!(
        std::fs::read(out1.join("model/params.bin")).unwrap(),
        std::fs::read(out2.join("model/params.bin")).unwrap()
    );
}

#[test]
fn unknown_config_key_exits_2_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"data": [], "learning_rate_typo": 1}"#).unwrap();
    let output = run(&["train", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("learning_rate_typo"), "stderr: {stderr}");
}

#[test]
fn train_folds_writes_cv_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 300, 5);
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &data, &out, "");
    let output = run(&["train", "--config", config.to_str().unwrap(), "--folds", "3"]);
    assert_exit(&output, 0);
    let cv: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("cv_metrics.json")).unwrap())
            .unwrap();
    assert_eq!(cv["folds"].as_array().unwrap().len(), 3);
    for audit in cv["audits"].as_array().unwrap() {
        assert_eq!(audit["synthetic_in_validation"], 0);
    }
}

#[test]
fn eval_threshold_changes_confusion_but_not_roc() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 400, 6);
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &data, &out, "");
    assert_exit(&run(&["train", "--config", config.to_str().unwrap()]), 0);

    let model = out.join("model");
    let eval1 = tmp.path().join("eval1");
    let eval2 = tmp.path().join("eval2");
    assert_exit(
        &run(&[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--out",
            eval1.to_str().unwrap(),
        ]),
        0,
    );
    assert_exit(
        &run(&[
            "eval",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--out",
            eval2.to_str().unwrap(),
            "--threshold",
            "0.9",
        ]),
        0,
    );
    let confusion1 = std::fs::read_to_string(eval1.join("confusion_ann.csv")).unwrap();
    let confusion2 = std::fs::read_to_string(eval2.join("confusion_ann.csv")).unwrap();
    assert_ne!(confusion1, confusion2, "threshold should move the confusion matrix");
    let roc1 = std::fs::read_to_string(eval1.join("roc_ann.csv")).unwrap();
    let roc2 = std::fs::read_to_string(eval2.join("roc_ann.csv")).unwrap();
    assert_eq!(roc1, roc2, "ROC is threshold-independent");
}

#[test]
fn eval_schema_mismatch_exits_4_with_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 300, 7);
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &data, &out, "");
    assert_exit(&run(&["train", "--config", config.to_str().unwrap()]), 0);
    // fixture has 5 features; the model was fitted on 6
    let output = run(&[
        "eval",
        "--model",
        out.join("model").to_str().unwrap(),
        "--data",
        fixture().to_str().unwrap(),
        "--out",
        tmp.path().join("eval").to_str().unwrap(),
    ]);
    assert_exit(&output, 4);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains('6') && stderr.contains('5'), "stderr: {stderr}");
}

#[test]
fn predict_streams_rows_and_tolerates_dirty_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 300, 8);
    let out = tmp.path().join("run");
    let config = write_config(tmp.path(), &data, &out, "");
    assert_exit(&run(&["train", "--config", config.to_str().unwrap()]), 0);

    // three clean rows plus one NaN row
    let header = std::fs::read_to_string(&data).unwrap();
    let mut lines: Vec<&str> = header.lines().collect();
    lines.truncate(4);
    let mut contents = lines.join("\n");
    contents.push_str("\nNaN,0,0,0,0,0,BENIGN\n");
    let predict_in = tmp.path().join("predict_in.csv");
    std::fs::write(&predict_in, contents).unwrap();

    let predictions = tmp.path().join("predictions.csv");
    let output = run(&[
        "predict",
        "--model",
        out.join("model").to_str().unwrap(),
        "--data",
        predict_in.to_str().unwrap(),
        "--out",
        predictions.to_str().unwrap(),
    ]);
    assert_exit(&output, 0); // dirty rows are row-level errors, not fatal
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rows_failed: 1"), "stderr: {stderr}");
    let body = std::fs::read_to_string(&predictions).unwrap();
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().filter(|r| r.contains(",ok")).count(), 3);
    assert_eq!(rows.iter().filter(|r| r.contains("error:")).count(), 1);
}

#[test]
fn predict_with_two_models_matches_ensemble_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 300, 9);
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    let c1 = write_config(tmp.path(), &data, &out1, "");
    assert_exit(&run(&["train", "--config", c1.to_str().unwrap()]), 0);
    assert_exit(
        &run(&[
            "train",
            "--config",
            c1.to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
            "--seed",
            "99",
        ]),
        0,
    );

    let single = |model: &Path| -> Vec<f64> {
        let output = run(&[
            "predict",
            "--model",
            model.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
        ]);
        assert_exit(&output, 0);
        String::from_utf8_lossy(&output.stdout)
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let p1 = single(&out1.join("model"));
    let p2 = single(&out2.join("model"));

    let output = run(&[
        "predict",
        "--model",
        out1.join("model").to_str().unwrap(),
        "--model",
        out2.join("model").to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_exit(&output, 0);
    let combined: Vec<f64> = String::from_utf8_lossy(&output.stdout)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for ((a, b), c) in p1.iter().zip(&p2).zip(&combined) {
        // outputs go through 6-significant-digit formatting
        assert!((c - (a + b) / 2.0).abs() < 1e-5, "{a} {b} -> {c}");
    }
}

#[test]
fn grid_emits_table_and_parallel_matches_serial() {
    let tmp = tempfile::tempdir().unwrap();
    let data = write_synth_csv(tmp.path(), 300, 10);
    let out1 = tmp.path().join("g1");
    let out2 = tmp.path().join("g2");
    let config_path = tmp.path().join("grid.json");
    std::fs::write(
        &config_path,
        format!(
            r#"{{
  "data": ["{}"],
  "out": "{}",
  "seed": 13,
  "model": {{"family": "ann", "hidden_sizes": [8]}},
  "train": {{"epochs": 3, "batch_size": 64, "dropout_rate": 0.0, "early_stop_patience": 0}},
  "preprocess": {{"normalization": "zscore", "top_k_features": 4, "no_smote": true}}
}}"#,
            data.display(),
            out1.display()
        ),
    )
    .unwrap();
    assert_exit(&run(&["grid", "--config", config_path.to_str().unwrap()]), 0);
    let grid1 = std::fs::read_to_string(out1.join("grid.csv")).unwrap();
    let rows: Vec<&str> = grid1.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "activation,Adam,AdaDelta,AdaGrad,AdaMax,FTRL,Nadam,RMSProp,SGD");
    assert!(rows[1].starts_with("Relu,"));
    assert!(rows[2].starts_with("Sigmoid,"));
    assert!(rows[3].starts_with("Tanh,"));

    assert_exit(
        &run(&[
            "grid",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out2.to_str().unwrap(),
            "--parallel",
            "4",
        ]),
        0,
    );
    let grid2 = std::fs::read_to_string(out2.join("grid.csv")).unwrap();
    assert_eq!(grid1, grid2, "parallel grid differs from serial");
}
