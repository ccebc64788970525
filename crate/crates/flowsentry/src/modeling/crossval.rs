//! Stratified k-fold cross-validation with fold-internal preprocessing.

use serde::{Deserialize, Serialize};

use super::train::{train, TrainConfig};
use super::{ModelError, ModelSpec};
use crate::evaluation::ClassificationReport;
use crate::flowdata::Dataset;
use crate::preprocess::{kfold_partition, PipelineConfig, PreprocessPipeline, SmoteConfig};
use crate::seeds;

/// Headline metrics aggregated over folds (attack-class precision/recall/F1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvAggregate {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-fold leakage accounting: synthetic rows may only ever appear on the
/// training side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvFoldAudit {
    pub train_rows: usize,
    pub synthetic_in_train: usize,
    pub validation_rows: usize,
    pub synthetic_in_validation: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<ClassificationReport>,
    pub mean: CvAggregate,
    /// Population standard deviation over folds.
    pub stddev: CvAggregate,
    pub audits: Vec<CvFoldAudit>,
}

fn aggregate(values: &[CvAggregate]) -> (CvAggregate, CvAggregate) {
    let n = values.len() as f64;
    let mean = CvAggregate {
        accuracy: values.iter().map(|v| v.accuracy).sum::<f64>() / n,
        precision: values.iter().map(|v| v.precision).sum::<f64>() / n,
        recall: values.iter().map(|v| v.recall).sum::<f64>() / n,
        f1: values.iter().map(|v| v.f1).sum::<f64>() / n,
    };
    let var = |f: fn(&CvAggregate) -> f64, m: f64| {
        (values.iter().map(|v| (f(v) - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let stddev = CvAggregate {
        accuracy: var(|v| v.accuracy, mean.accuracy),
        precision: var(|v| v.precision, mean.precision),
        recall: var(|v| v.recall, mean.recall),
        f1: var(|v| v.f1, mean.f1),
    };
    (mean, stddev)
}

/// Run k-fold cross-validation on a cleaned (but untransformed) dataset.
///
/// Inside every fold the pipeline (normalizer, correlation-based selection)
/// is re-fitted on the training portion only, and SMOTE, when configured,
/// oversamples only the training portion — the validation fold is never
/// inflated or transformed by statistics it contributed to.
pub fn cross_validate(
    spec: &ModelSpec,
    dataset: &Dataset,
    k: usize,
    config: &TrainConfig,
    pipeline_config: &PipelineConfig,
    smote: Option<&SmoteConfig>,
) -> Result<CvReport, ModelError> {
    let folds = kfold_partition(dataset, k, config.seed)?;
    let mut reports = Vec::with_capacity(k);
    let mut audits = Vec::with_capacity(k);
    let mut headline = Vec::with_capacity(k);
    for fold in 0..k {
        let train_raw = dataset.subset(&folds.complement_indices(fold));
        let val_raw = dataset.subset(&folds.fold_indices(fold));
        let pipeline = PreprocessPipeline::fit(&train_raw, pipeline_config)?;
        let mut train_set = pipeline.apply(&train_raw)?;
        let val_set = pipeline.apply(&val_raw)?;
        if let Some(smote_cfg) = smote {
            train_set =
                smote_cfg.apply(&train_set, seeds::derive(config.seed, "cv-smote", fold as u64))?;
        }
        audits.push(CvFoldAudit {
            train_rows: train_set.len(),
            synthetic_in_train: train_set.rows.iter().filter(|r| r.synthetic).count(),
            validation_rows: val_set.len(),
            synthetic_in_validation: val_set.rows.iter().filter(|r| r.synthetic).count(),
        });
        let fold_spec = ModelSpec { input_dim: pipeline.output_dim(), ..spec.clone() };
        let fold_config = TrainConfig {
            seed: seeds::derive(config.seed, "cv-fold", fold as u64),
            ..config.clone()
        };
        let (model, _) = train(&fold_spec, &train_set, &val_set, &fold_config, &pipeline)?;
        let (report, _) = model.evaluate_transformed(&val_set, config.threshold)?;
        headline.push(CvAggregate {
            accuracy: report.accuracy,
            precision: report.attack.precision,
            recall: report.attack.recall,
            f1: report.attack.f1,
        });
        reports.push(report);
    }
    let (mean, stddev) = aggregate(&headline);
    Ok(CvReport { folds: reports, mean, stddev, audits })
}
