//! The five subcommands. Each artifact-producing command writes exactly one
//! `run_manifest.json` beside its outputs and never mutates its inputs.

use std::io::Write;
use std::path::{Path, PathBuf};

use flowsentry::evaluation::{
    self, fmt_sig, measure_latency, LatencyStats, ReportBundle, LATENCY_MIN_REPETITIONS,
};
use flowsentry::flowdata::{
    class_distribution, load_flow_csv, load_rows_lenient, map_labels, Dataset, DistributionReport,
};
use flowsentry::modeling::{
    cross_validate, ensemble_predict, load_model, run_optimizer_activation_grid, train as train_model,
    ModelSpec, TrainHistory, TrainedModel,
};
use flowsentry::preprocess::{
    clean, feature_label_correlation, split_train_test, PreprocessPipeline,
};
use flowsentry::seeds;

use crate::config::{load_config_file, resolve, Overrides, ResolvedConfig};
use crate::manifest::RunManifest;
use crate::CliError;

/// Share of the training split kept for gradient updates; the rest becomes
/// the epoch-validation set driving early stopping. The held-out test split
/// never participates in training.
const TRAIN_CORE_FRACTION: f64 = 0.8;

fn print_distribution(report: &DistributionReport) {
    println!("class distribution:");
    for (attack_type, count) in &report.count_per_attack_type {
        println!("  {:<16} {}", attack_type.name(), count);
    }
    println!(
        "  benign {} ({:.4})  attack {} ({:.4})",
        report.count_benign, report.fraction_benign, report.count_attack, report.fraction_attack
    );
}

fn correlation_rows(dataset: &Dataset) -> Result<Vec<(String, f64, bool)>, CliError> {
    let corr = feature_label_correlation(dataset)?;
    Ok(dataset
        .schema
        .feature_names
        .iter()
        .cloned()
        .zip(corr.r.iter().copied())
        .zip(corr.defined.iter().copied())
        .map(|((name, r), defined)| (name, r, defined))
        .collect())
}

pub fn inspect(data: &[PathBuf], out: &Path, benign_tokens: &[String]) -> Result<(), CliError> {
    let manifest = RunManifest::begin("inspect", &serde_json::json!({"data": data}), data, 0)?;
    let mut ds = load_flow_csv(data, None)?;
    if !benign_tokens.is_empty() {
        ds = map_labels(&ds, benign_tokens);
    }
    let distribution = class_distribution(&ds)?;
    print_distribution(&distribution);

    let mut bundle = ReportBundle { distribution: Some(distribution), ..Default::default() };
    match clean(&ds) {
        Ok((cleaned, report)) => {
            if report.rows_dropped_nan + report.rows_dropped_inf > 0 {
                log::info!(
                    "cleaning dropped {} NaN rows and {} infinite rows",
                    report.rows_dropped_nan,
                    report.rows_dropped_inf
                );
            }
            bundle.correlation = Some(correlation_rows(&cleaned)?);
        }
        Err(e) => log::warn!("skipping correlation: {e}"),
    }
    evaluation::render_reports(&bundle, out)?;
    manifest.finish(out)?;
    Ok(())
}

/// Shared preprocessing for train and grid: load, label, clean, stratified
/// train/test split, pipeline fit on the training split, validation carve,
/// optional SMOTE of the training core.
struct PreparedData {
    train_core: Dataset,
    validation: Dataset,
    test: Dataset,
    /// Cleaned raw (untransformed) test rows, for latency replays.
    test_raw: Dataset,
    pipeline: PreprocessPipeline,
    distribution: DistributionReport,
    correlation: Vec<(String, f64, bool)>,
    spec: ModelSpec,
}

fn prepare(resolved: &ResolvedConfig) -> Result<PreparedData, CliError> {
    if resolved.data.is_empty() {
        return Err(CliError::Config("no input data files (set \"data\" or --data)".into()));
    }
    let loaded = load_flow_csv(&resolved.data, None)?;
    let labeled = map_labels(&loaded, &resolved.benign_tokens);
    drop(loaded);
    let distribution = class_distribution(&labeled)?;
    let (cleaned, clean_report) = clean(&labeled)?;
    drop(labeled);
    log::info!(
        "cleaned {} rows -> {} ({} NaN, {} Inf dropped)",
        clean_report.rows_in,
        clean_report.rows_out,
        clean_report.rows_dropped_nan,
        clean_report.rows_dropped_inf
    );
    let (train_full, test_raw) =
        split_train_test(&cleaned, resolved.train_fraction, resolved.seed, true)?;
    let pipeline = PreprocessPipeline::fit(&train_full, &resolved.preprocess)?;
    let correlation = correlation_rows(&train_full)?;
    let train_t = pipeline.apply(&train_full)?;
    let test_t = pipeline.apply(&test_raw)?;
    let (mut train_core, validation) = split_train_test(
        &train_t,
        TRAIN_CORE_FRACTION,
        seeds::derive(resolved.seed, "validation-carve", 0),
        true,
    )?;
    if let Some(smote) = &resolved.smote {
        train_core = smote.apply(&train_core, seeds::derive(resolved.seed, "smote", 0))?;
    }
    let spec = ModelSpec { input_dim: pipeline.output_dim(), ..resolved.model.clone() };
    Ok(PreparedData {
        train_core,
        validation,
        test: test_t,
        test_raw,
        pipeline,
        distribution,
        correlation,
        spec,
    })
}

fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,validation_loss,validation_accuracy\n");
    for (i, e) in history.epochs.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i,
            fmt_sig(e.train_loss),
            fmt_sig(e.validation_loss),
            fmt_sig(e.validation_accuracy)
        ));
    }
    out
}

fn latency_on_raw(model: &TrainedModel, raw: &Dataset) -> Result<LatencyStats, CliError> {
    // verify every sample upfront so the timed loop cannot error
    for row in raw.rows.iter().take(64) {
        model.predict_record(row).map_err(CliError::from)?;
    }
    let sample: Vec<&flowsentry::flowdata::FlowRecord> = raw.rows.iter().take(64).collect();
    let stats = measure_latency(
        |i| {
            let _ = model
                .predict_record(sample[i])
                .expect("latency samples were validated");
        },
        sample.len(),
        LATENCY_MIN_REPETITIONS.max(10_000),
    )?;
    Ok(stats)
}

pub fn train(
    config_path: &Path,
    overrides: &Overrides,
    folds: Option<usize>,
    latency: bool,
) -> Result<(), CliError> {
    let mut resolved = resolve(load_config_file(config_path)?, overrides)?;
    let prepared = prepare(&resolved)?;
    // the manifest records the architecture actually trained, so the model
    // section carries the pipeline-determined input width
    resolved.model = prepared.spec.clone();
    let manifest = RunManifest::begin("train", &resolved, &resolved.data, resolved.seed)?;
    let mut train_config = resolved.train.clone();
    train_config.seed = resolved.seed;

    let (model, history) = train_model(
        &prepared.spec,
        &prepared.train_core,
        &prepared.validation,
        &train_config,
        &prepared.pipeline,
    )?;
    let model_name = prepared.spec.family.name().to_lowercase();
    let (report, roc) = model.evaluate_transformed(&prepared.test, train_config.threshold)?;
    println!(
        "{model_name}: test accuracy {:.4}, attack F1 {:.4}{}",
        report.accuracy,
        report.attack.f1,
        roc.as_ref().map_or(String::new(), |r| format!(", AUC {:.4}", r.auc)),
    );

    let mut bundle = ReportBundle {
        distribution: Some(prepared.distribution.clone()),
        correlation: Some(prepared.correlation.clone()),
        ..Default::default()
    };
    bundle.metrics.insert(model_name.clone(), report);
    if let Some(roc) = roc {
        bundle.roc.insert(model_name.clone(), roc);
    }
    if latency {
        bundle.latency.insert(model_name.clone(), latency_on_raw(&model, &prepared.test_raw)?);
    }
    evaluation::render_reports(&bundle, &resolved.out)?;
    std::fs::write(resolved.out.join("history.csv"), history_csv(&history))
        .map_err(|e| CliError::Other(format!("cannot write history.csv: {e}")))?;
    model.save(&resolved.out.join("model"))?;

    if let Some(k) = folds {
        // CV re-fits the pipeline inside each fold, so it runs on cleaned,
        // untransformed data
        let loaded = load_flow_csv(&resolved.data, None)?;
        let labeled = map_labels(&loaded, &resolved.benign_tokens);
        drop(loaded);
        let (cleaned, _) = clean(&labeled)?;
        drop(labeled);
        let cv = cross_validate(
            &resolved.model,
            &cleaned,
            k,
            &train_config,
            &resolved.preprocess,
            resolved.smote.as_ref(),
        )?;
        println!(
            "{k}-fold CV: accuracy {:.4} +/- {:.4}",
            cv.mean.accuracy, cv.stddev.accuracy
        );
        let json = serde_json::to_string_pretty(&cv)
            .map_err(|e| CliError::Other(format!("cv report: {e}")))?;
        std::fs::write(resolved.out.join("cv_metrics.json"), json + "\n")
            .map_err(|e| CliError::Other(format!("cannot write cv_metrics.json: {e}")))?;
    }
    manifest.finish(&resolved.out)?;
    Ok(())
}

pub fn grid(config_path: &Path, overrides: &Overrides, parallel: usize) -> Result<(), CliError> {
    let mut resolved = resolve(load_config_file(config_path)?, overrides)?;
    let prepared = prepare(&resolved)?;
    resolved.model = prepared.spec.clone();
    let manifest = RunManifest::begin("grid", &resolved, &resolved.data, resolved.seed)?;
    let mut train_config = resolved.train.clone();
    train_config.seed = resolved.seed;
    let grid_report = run_optimizer_activation_grid(
        &prepared.train_core,
        &prepared.validation,
        &prepared.test,
        &prepared.spec,
        &train_config,
        &prepared.pipeline,
        parallel.max(1),
    )?;
    let failed = grid_report.cells.iter().flatten().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of 24 grid cells failed; see grid.csv and logs");
    }
    print!("{}", evaluation::render_grid_csv(&grid_report));
    let bundle = ReportBundle { grid: Some(grid_report), ..Default::default() };
    evaluation::render_reports(&bundle, &resolved.out)?;
    manifest.finish(&resolved.out)?;
    Ok(())
}

pub fn eval(
    model_path: &Path,
    data: &[PathBuf],
    out: &Path,
    threshold: f64,
    latency: bool,
    benign_tokens: &[String],
) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let manifest = RunManifest::begin(
        "eval",
        &serde_json::json!({
            "model": model_path,
            "data": data,
            "threshold": threshold,
            "latency": latency,
        }),
        data,
        0,
    )?;
    let loaded = load_flow_csv(data, None)?;
    let labeled = if benign_tokens.is_empty() {
        loaded
    } else {
        map_labels(&loaded, benign_tokens)
    };
    let (cleaned, _) = clean(&labeled)?;
    if cleaned.schema.feature_names != model.pipeline.feature_names {
        return Err(CliError::SchemaMismatch(format!(
            "model expects {} features, data has {}",
            model.pipeline.feature_names.len(),
            cleaned.schema.feature_names.len()
        )));
    }
    let transformed = model.pipeline.apply(&cleaned)?;
    let (report, roc) = model.evaluate_transformed(&transformed, threshold)?;
    let model_name = model.spec.family.name().to_lowercase();
    println!(
        "{model_name}: accuracy {:.4}, attack F1 {:.4}{}",
        report.accuracy,
        report.attack.f1,
        roc.as_ref().map_or(String::new(), |r| format!(", AUC {:.4}", r.auc)),
    );
    let mut bundle = ReportBundle::default();
    bundle.metrics.insert(model_name.clone(), report);
    if let Some(roc) = roc {
        bundle.roc.insert(model_name.clone(), roc);
    }
    if latency {
        bundle.latency.insert(model_name, latency_on_raw(&model, &cleaned)?);
    }
    evaluation::render_reports(&bundle, out)?;
    manifest.finish(out)?;
    Ok(())
}

pub fn predict(
    model_paths: &[PathBuf],
    data: &Path,
    out: Option<&Path>,
    threshold: f64,
) -> Result<(), CliError> {
    let models: Vec<TrainedModel> =
        model_paths.iter().map(|p| load_model(p)).collect::<Result<_, _>>()?;
    let refs: Vec<&TrainedModel> = models.iter().collect();
    let feature_names = &models[0].pipeline.feature_names;
    for m in &models[1..] {
        if m.pipeline.feature_names != *feature_names {
            return Err(CliError::SchemaMismatch(
                "ensemble members expect different feature schemas".into(),
            ));
        }
    }
    let label_column = "Label";
    let rows = match load_rows_lenient(data, feature_names, label_column) {
        Ok(rows) => rows,
        Err(e @ flowsentry::flowdata::FlowDataError::MissingFeatureColumns { .. }) => {
            return Err(CliError::SchemaMismatch(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };

    let mut writer: Box<dyn Write> = match out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| {
            CliError::Other(format!("cannot create {}: {e}", path.display()))
        })?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut csv_out = csv::Writer::from_writer(&mut writer);
    csv_out
        .write_record(["row", "probability", "label", "status"])
        .map_err(|e| CliError::Other(e.to_string()))?;
    let mut failed = 0usize;
    for (i, row) in rows.rows.iter().enumerate() {
        let outcome = row.as_ref().map_err(|e| e.clone()).and_then(|features| {
            let p = if refs.len() == 1 {
                refs[0].predict_features(features)
            } else {
                ensemble_predict(&refs, None, features)
            };
            p.map_err(|e| e.to_string())
        });
        let record = match outcome {
            Ok(p) => {
                let label = if p >= threshold { "attack" } else { "benign" };
                vec![i.to_string(), fmt_sig(p), label.to_string(), "ok".to_string()]
            }
            Err(msg) => {
                failed += 1;
                vec![i.to_string(), String::new(), String::new(), format!("error: {msg}")]
            }
        };
        csv_out.write_record(&record).map_err(|e| CliError::Other(e.to_string()))?;
    }
    csv_out.flush().map_err(|e| CliError::Other(e.to_string()))?;
    drop(csv_out);
    if failed > 0 {
        eprintln!("rows_failed: {failed} of {}", rows.rows.len());
    }
    Ok(())
}
