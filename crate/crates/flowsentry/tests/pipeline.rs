//! End-to-end library pipeline: ingest -> label -> clean -> split ->
//! normalize -> select -> SMOTE -> train -> evaluate -> persist.

use flowsentry::evaluation::{render_reports, ReportBundle};
use flowsentry::flowdata::{class_distribution, load_flow_csv, write_flow_csv};
use flowsentry::modeling::{
    ensemble_predict, load_model, train, ModelSpec, TrainConfig, TrainedModel,
};
use flowsentry::preprocess::{
    clean, smote_oversample, split_train_test, NormMethod, PipelineConfig, PreprocessPipeline,
};
use flowsentry::synth::two_gaussians;

fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 12,
        batch_size: 64,
        dropout_rate: 0.1,
        early_stop_patience: 0,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn csv_to_trained_model_to_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = tmp.path().join("flows.csv");
    write_flow_csv(&two_gaussians(800, 6, 2.2, 9), &csv_path).unwrap();

    let loaded = load_flow_csv(&[csv_path], None).unwrap();
    let distribution = class_distribution(&loaded).unwrap();
    assert_eq!(distribution.count_benign + distribution.count_attack, 800);

    let (cleaned, report) = clean(&loaded).unwrap();
    assert_eq!(report.rows_out, 800);

    let (train_full, test) = split_train_test(&cleaned, 0.8, 3, true).unwrap();
    let config = PipelineConfig { normalization: NormMethod::ZScore, top_k_features: Some(4) };
    let pipeline = PreprocessPipeline::fit(&train_full, &config).unwrap();
    assert_eq!(pipeline.output_dim(), 4);

    let train_t = pipeline.apply(&train_full).unwrap();
    let test_t = pipeline.apply(&test).unwrap();
    let (train_core, val) = split_train_test(&train_t, 0.8, 4, true).unwrap();
    let train_core = smote_oversample(&train_core, 5, 1.0, 5).unwrap();
    assert!(test_t.rows.iter().all(|r| !r.synthetic));

    let spec = ModelSpec::ann(4);
    let (model, history) = train(&spec, &train_core, &val, &quick_config(6), &pipeline).unwrap();
    assert!(!history.epochs.is_empty());
    let (metrics, roc) = model.evaluate_transformed(&test_t, 0.5).unwrap();
    assert!(metrics.accuracy > 0.85, "accuracy {}", metrics.accuracy);
    let roc = roc.unwrap();
    assert!(roc.auc > 0.9, "auc {}", roc.auc);

    // raw-record prediction path agrees with the transformed path
    let raw = &test.rows[0];
    let p_record = model.predict_record(raw).unwrap();
    let p_batch = model.predict_transformed(&test_t).unwrap()[0];
    assert!((p_record - p_batch).abs() < 1e-12);

    // persistence round trip
    let model_dir = tmp.path().join("model");
    model.save(&model_dir).unwrap();
    let restored = load_model(&model_dir).unwrap();
    assert_eq!(
        restored.predict_record(raw).unwrap().to_bits(),
        p_record.to_bits()
    );

    // report bundle lands on disk
    let mut bundle = ReportBundle::default();
    bundle.metrics.insert("ann".into(), metrics);
    bundle.roc.insert("ann".into(), roc);
    bundle.distribution = Some(distribution);
    let out = tmp.path().join("reports");
    let files = render_reports(&bundle, &out).unwrap();
    assert!(files.len() >= 4);
    let parsed = flowsentry::evaluation::parse_metrics_json(
        &std::fs::read_to_string(out.join("metrics.json")).unwrap(),
    )
    .unwrap();
    assert!(parsed.models.contains_key("ann"));
}

#[test]
fn heterogeneous_ensemble_stays_within_member_bounds() {
    let ds = two_gaussians(400, 8, 2.0, 31);
    let (train_full, test) = split_train_test(&ds, 0.8, 1, true).unwrap();
    let config = PipelineConfig { normalization: NormMethod::MinMax, top_k_features: None };
    let pipeline = PreprocessPipeline::fit(&train_full, &config).unwrap();
    let train_t = pipeline.apply(&train_full).unwrap();
    let (core, val) = split_train_test(&train_t, 0.8, 2, true).unwrap();

    let mut members: Vec<TrainedModel> = Vec::new();
    for spec in [ModelSpec::ann(8), ModelSpec::cnn(8)] {
        members.push(train(&spec, &core, &val, &quick_config(21), &pipeline).unwrap().0);
    }
    let refs: Vec<&TrainedModel> = members.iter().collect();
    for row in test.rows.iter().take(20) {
        let vote = ensemble_predict(&refs, None, &row.features).unwrap();
        let ps: Vec<f64> = refs
            .iter()
            .map(|m| m.predict_features(&row.features).unwrap())
            .collect();
        let lo = ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(vote >= lo - 1e-15 && vote <= hi + 1e-15);
    }
}
