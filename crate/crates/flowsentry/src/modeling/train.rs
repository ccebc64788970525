//! The training loop, trained-model artifacts, and soft-voting ensembles.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ModelError, ModelSpec};
use crate::evaluation::{
    classification_report, confusion_matrix, roc_curve, ClassificationReport, RocCurve,
};
use crate::flowdata::{Dataset, FlowRecord};
use crate::neuralcore::{
    binary_cross_entropy, network_from_parts, network_to_parts, Network, Regularization, Tensor,
    BCE_EPSILON,
};
use crate::optimizers::{OptimizerConfig, OptimizerState};
use crate::preprocess::PreprocessPipeline;
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub l1: f64,
    pub l2: f64,
    pub dropout_rate: f64,
    /// Epochs without validation-loss improvement before stopping and
    /// restoring the best weights. 0 disables early stopping entirely.
    pub early_stop_patience: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerConfig::defaults(crate::optimizers::OptimizerKind::Adam),
            epochs: 30,
            batch_size: 256,
            l1: 0.0,
            l2: 1e-4,
            dropout_rate: 0.2,
            early_stop_patience: 5,
            seed: 0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainEpoch {
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<TrainEpoch>,
    /// Index of the epoch whose weights the model kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// A frozen network plus everything needed to reproduce and reuse it.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    network: Network,
    pub spec: ModelSpec,
    pub config: TrainConfig,
    pub pipeline: PreprocessPipeline,
    pub validation_metrics: Option<ClassificationReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Benign,
    Attack,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Benign => "benign",
            Classification::Attack => "attack",
        }
    }
}

fn dataset_to_tensors(ds: &Dataset) -> (Tensor, Tensor, Vec<u8>) {
    let n = ds.len();
    let d = ds.schema.feature_count();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for row in &ds.rows {
        x.extend_from_slice(&row.features);
        y.push(f64::from(row.label_binary));
        labels.push(row.label_binary);
    }
    (
        Tensor::from_vec(&[n, d], x),
        Tensor::from_vec(&[n, 1], y),
        labels,
    )
}

/// Mini-batch gradient training with seeded shuffling, L1/L2 penalties,
/// dropout, and optional early stopping with best-epoch weight restoration.
///
/// `train` and `validation` must already be transformed by `pipeline`; the
/// pipeline itself is stored on the returned model so inference can replay
/// it on raw records.
pub fn train(
    spec: &ModelSpec,
    train_set: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
    pipeline: &PreprocessPipeline,
) -> Result<(TrainedModel, TrainHistory), ModelError> {
    if train_set.is_empty() || validation.is_empty() {
        return Err(ModelError::InvalidSetup("train and validation must be non-empty".into()));
    }
    if train_set.schema.feature_count() != spec.input_dim {
        return Err(ModelError::SchemaMismatch(format!(
            "spec expects {} features, train set has {}",
            spec.input_dim,
            train_set.schema.feature_count()
        )));
    }
    let (benign, attack) = train_set.class_indices();
    if benign.is_empty() || attack.is_empty() {
        return Err(ModelError::InvalidSetup("training set must contain both classes".into()));
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(ModelError::InvalidSetup(format!(
            "threshold {} must be in (0,1)",
            config.threshold
        )));
    }
    if !(0.0..1.0).contains(&config.dropout_rate) {
        return Err(ModelError::InvalidSetup(format!(
            "dropout rate {} must be in [0,1)",
            config.dropout_rate
        )));
    }
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(ModelError::InvalidSetup("epochs and batch_size must be >= 1".into()));
    }
    if config.l1 < 0.0 || config.l2 < 0.0 {
        return Err(ModelError::InvalidSetup("l1/l2 must be >= 0".into()));
    }

    let batch_size = if config.batch_size > train_set.len() {
        log::warn!(
            "batch size {} exceeds training set size {}; clamping",
            config.batch_size,
            train_set.len()
        );
        train_set.len()
    } else {
        config.batch_size
    };

    let mut network = spec.build(config.seed)?;
    network.set_dropout_rate(config.dropout_rate);
    let reg = Regularization { l1: config.l1, l2: config.l2 };
    let mut optimizer = OptimizerState::from_network(&config.optimizer, &network)?;

    let (x_train, y_train, _) = dataset_to_tensors(train_set);
    let (x_val, y_val, val_labels) = dataset_to_tensors(validation);
    let n = train_set.len();

    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Network, usize)> = None;
    let mut stale_epochs = 0usize;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        let mut shuffle_rng = seeds::rng(seeds::derive(config.seed, "shuffle", epoch as u64));
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for (batch_idx, chunk) in order.chunks(batch_size).enumerate() {
            let xb = x_train.gather_rows(chunk);
            let yb = y_train.gather_rows(chunk);
            let forward_seed =
                seeds::derive(config.seed, "forward", (epoch * 1_000_000 + batch_idx) as u64);
            let (probs, cache) = network.forward(&xb, true, forward_seed)?;
            let (data_loss, loss_grad) = binary_cross_entropy(&probs, &yb, BCE_EPSILON)?;
            let loss = data_loss + network.penalty_loss(&reg);
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                    diagnostics: format!(
                        "loss {loss}; optimizer state norm {:.3e}",
                        optimizer.state_norm()
                    ),
                });
            }
            epoch_loss += loss * chunk.len() as f64;
            let grads = network.backward(&cache, &loss_grad, &reg)?;
            let mut params = network.params_mut();
            optimizer.step(&mut params, &grads).map_err(|e| match e {
                crate::optimizers::OptimizerError::NonFiniteGradient { param } => {
                    ModelError::NonFiniteLoss {
                        epoch,
                        batch: batch_idx,
                        diagnostics: format!("non-finite gradient in '{param}'"),
                    }
                }
                other => ModelError::Optimizer(other),
            })?;
        }
        let train_loss = epoch_loss / n as f64;

        let (val_probs, _) = network.forward(&x_val, false, 0)?;
        let (validation_loss, _) = binary_cross_entropy(&val_probs, &y_val, BCE_EPSILON)?;
        let cm = confusion_matrix(val_probs.data(), &val_labels, config.threshold)?;
        let validation_accuracy = classification_report(&cm).accuracy;
        history.epochs.push(TrainEpoch { train_loss, validation_loss, validation_accuracy });

        if config.early_stop_patience > 0 {
            let improved = best.as_ref().is_none_or(|(b, _, _)| validation_loss < *b);
            if improved {
                best = Some((validation_loss, network.clone(), epoch));
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= config.early_stop_patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }

    if let Some((_, best_net, best_epoch)) = best {
        network = best_net;
        history.best_epoch = best_epoch;
    } else {
        history.best_epoch = history.epochs.len().saturating_sub(1);
    }

    let (val_probs, _) = network.forward(&x_val, false, 0)?;
    let cm = confusion_matrix(val_probs.data(), &val_labels, config.threshold)?;
    let model = TrainedModel {
        network,
        spec: spec.clone(),
        config: config.clone(),
        pipeline: pipeline.clone(),
        validation_metrics: Some(classification_report(&cm)),
    };
    Ok((model, history))
}

impl TrainedModel {
    pub fn network(&self) -> &Network {
        &self.network
    }

    /// Probability that a raw record (original schema, untransformed) is an
    /// attack. Replays the stored pipeline; errors on non-finite features.
    pub fn predict_record(&self, record: &FlowRecord) -> Result<f64, ModelError> {
        self.predict_features(&record.features)
    }

    pub fn predict_features(&self, features: &[f64]) -> Result<f64, ModelError> {
        let transformed = self.pipeline.apply_features(features)?;
        let x = Tensor::from_vec(&[1, transformed.len()], transformed);
        let (p, _) = self.network.forward(&x, false, 0)?;
        Ok(p.data()[0])
    }

    /// Probabilities for a dataset that is already pipeline-transformed.
    pub fn predict_transformed(&self, dataset: &Dataset) -> Result<Vec<f64>, ModelError> {
        let (x, _, _) = dataset_to_tensors(dataset);
        let (p, _) = self.network.forward(&x, false, 0)?;
        Ok(p.data().to_vec())
    }

    pub fn classify(
        &self,
        record: &FlowRecord,
        threshold: f64,
    ) -> Result<Classification, ModelError> {
        let p = self.predict_record(record)?;
        Ok(if p >= threshold { Classification::Attack } else { Classification::Benign })
    }

    /// Classification report and ROC over a pipeline-transformed dataset.
    /// ROC is `None` when the labels are single-class.
    pub fn evaluate_transformed(
        &self,
        dataset: &Dataset,
        threshold: f64,
    ) -> Result<(ClassificationReport, Option<RocCurve>), ModelError> {
        let probs = self.predict_transformed(dataset)?;
        let labels: Vec<u8> = dataset.rows.iter().map(|r| r.label_binary).collect();
        let cm = confusion_matrix(&probs, &labels, threshold)?;
        let roc = roc_curve(&probs, &labels).ok();
        Ok((classification_report(&cm), roc))
    }

    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        std::fs::create_dir_all(dir)?;
        let (network_manifest, blob) = network_to_parts(&self.network);
        let manifest = ArtifactManifest {
            version: MODEL_ARTIFACT_VERSION,
            model_spec: self.spec.clone(),
            train_config: self.config.clone(),
            pipeline: self.pipeline.clone(),
            network: network_manifest,
            validation_metrics: self.validation_metrics.clone(),
            params_file: PARAMS_FILE.to_string(),
        };
        std::fs::write(
            dir.join(MANIFEST_FILE),
            serde_json::to_string_pretty(&manifest)
                .map_err(|e| ModelError::Artifact(e.to_string()))?,
        )?;
        std::fs::write(dir.join(PARAMS_FILE), blob)?;
        Ok(())
    }
}

pub const MODEL_ARTIFACT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";
const PARAMS_FILE: &str = "params.bin";

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactManifest {
    version: u32,
    model_spec: ModelSpec,
    train_config: TrainConfig,
    pipeline: PreprocessPipeline,
    network: serde_json::Value,
    validation_metrics: Option<ClassificationReport>,
    params_file: String,
}

/// Load a model artifact from a directory (or a path to its manifest.json).
pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        (
            path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    };
    let manifest: ArtifactManifest =
        serde_json::from_reader(std::fs::File::open(&manifest_path)?)
            .map_err(|e| ModelError::Artifact(format!("bad manifest: {e}")))?;
    if manifest.version != MODEL_ARTIFACT_VERSION {
        return Err(ModelError::Artifact(format!(
            "unsupported artifact version {}",
            manifest.version
        )));
    }
    let blob = std::fs::read(dir.join(&manifest.params_file))?;
    let network = network_from_parts(&manifest.network, &blob)?;
    Ok(TrainedModel {
        network,
        spec: manifest.model_spec,
        config: manifest.train_config,
        pipeline: manifest.pipeline,
        validation_metrics: manifest.validation_metrics,
    })
}

/// Weighted soft-voting over member probabilities. Members must share one
/// input schema; weights default to uniform.
pub fn ensemble_predict(
    models: &[&TrainedModel],
    weights: Option<&[f64]>,
    features: &[f64],
) -> Result<f64, ModelError> {
    if models.len() < 2 {
        return Err(ModelError::InvalidSetup("an ensemble needs at least two members".into()));
    }
    let first = &models[0].pipeline.feature_names;
    for m in &models[1..] {
        if m.pipeline.feature_names != *first {
            return Err(ModelError::SchemaMismatch(
                "ensemble members were fitted on different feature schemas".into(),
            ));
        }
    }
    let uniform = vec![1.0; models.len()];
    let w = weights.unwrap_or(&uniform);
    if w.len() != models.len() {
        return Err(ModelError::InvalidSetup(format!(
            "{} weights for {} members",
            w.len(),
            models.len()
        )));
    }
    if w.iter().any(|&v| v < 0.0) || w.iter().sum::<f64>() <= 0.0 {
        return Err(ModelError::InvalidSetup(
            "weights must be non-negative and not all zero".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    for (model, &weight) in models.iter().zip(w) {
        if weight == 0.0 {
            continue;
        }
        acc += weight * model.predict_features(features)?;
    }
    Ok(acc / total)
}
