//! Strict JSON run configuration. Unknown keys are fatal; every omitted
//! field resolves to a documented default, and the fully resolved config is
//! what lands in the run manifest.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use flowsentry::modeling::{ModelFamily, ModelSpec, TrainConfig};
use flowsentry::neuralcore::Activation;
use flowsentry::optimizers::{OptimizerConfig, OptimizerKind};
use flowsentry::preprocess::{ImbalanceMethod, NormMethod, PipelineConfig, SmoteConfig};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub data: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub preprocess: PreprocessSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub family: Option<String>,
    pub activation: Option<String>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub filters: Option<usize>,
    pub kernel_size: Option<usize>,
    pub pool_size: Option<usize>,
    pub dense_units: Option<usize>,
    pub timesteps: Option<usize>,
    pub hidden_units: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub optimizer: OptimizerSection,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub kind: Option<String>,
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub momentum: Option<f64>,
    pub ftrl_beta: Option<f64>,
    pub ftrl_l1: Option<f64>,
    pub ftrl_l2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    pub normalization: Option<String>,
    pub top_k_features: Option<usize>,
    #[serde(default)]
    pub smote: SmoteSection,
    pub no_smote: Option<bool>,
    pub benign_tokens: Option<Vec<String>>,
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteSection {
    /// "smote" (default) or "duplicate".
    pub method: Option<String>,
    pub k_neighbors: Option<usize>,
    pub target_ratio: Option<f64>,
}

/// The fully materialized configuration a run actually uses.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub data: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub preprocess: PipelineConfig,
    pub smote: Option<SmoteConfig>,
    pub benign_tokens: Vec<String>,
    pub train_fraction: f64,
}

/// Flag-level overrides that beat the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub data: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub top_k_features: Option<usize>,
    pub no_smote: bool,
}

fn parse_enum<T: FromStr<Err = String>>(value: &Option<String>, default: T) -> Result<T, CliError> {
    match value {
        None => Ok(default),
        Some(s) => T::from_str(s).map_err(CliError::Config),
    }
}

pub fn load_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

/// Model input_dim is unknown until preprocessing has run; it is patched in
/// by the command once the pipeline is fitted.
pub fn resolve(file: ConfigFile, overrides: &Overrides) -> Result<ResolvedConfig, CliError> {
    let family: ModelFamily = parse_enum(&file.model.family, ModelFamily::Ann)?;
    let activation: Activation = parse_enum(&file.model.activation, Activation::Relu)?;
    let base = ModelSpec::ann(0);
    let model = ModelSpec {
        family,
        activation,
        input_dim: 0,
        hidden_sizes: file.model.hidden_sizes.unwrap_or(base.hidden_sizes),
        filters: file.model.filters.unwrap_or(base.filters),
        kernel_size: file.model.kernel_size.unwrap_or(base.kernel_size),
        pool_size: file.model.pool_size.unwrap_or(base.pool_size),
        dense_units: file.model.dense_units.unwrap_or(base.dense_units),
        timesteps: file.model.timesteps.unwrap_or(base.timesteps),
        hidden_units: file.model.hidden_units.unwrap_or(base.hidden_units),
    };

    let kind: OptimizerKind = parse_enum(&file.train.optimizer.kind, OptimizerKind::Adam)?;
    let defaults = OptimizerConfig::defaults(kind);
    let o = &file.train.optimizer;
    let optimizer = OptimizerConfig {
        kind,
        learning_rate: o.learning_rate.unwrap_or(defaults.learning_rate),
        beta1: o.beta1.unwrap_or(defaults.beta1),
        beta2: o.beta2.unwrap_or(defaults.beta2),
        rho: o.rho.unwrap_or(defaults.rho),
        epsilon: o.epsilon.unwrap_or(defaults.epsilon),
        momentum: o.momentum.unwrap_or(defaults.momentum),
        ftrl_beta: o.ftrl_beta.unwrap_or(defaults.ftrl_beta),
        ftrl_l1: o.ftrl_l1.unwrap_or(defaults.ftrl_l1),
        ftrl_l2: o.ftrl_l2.unwrap_or(defaults.ftrl_l2),
    };
    optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let seed = overrides.seed.or(file.seed).unwrap_or(0);
    let train_defaults = TrainConfig::default();
    let train = TrainConfig {
        optimizer,
        epochs: file.train.epochs.unwrap_or(train_defaults.epochs),
        batch_size: file.train.batch_size.unwrap_or(train_defaults.batch_size),
        l1: file.train.l1.unwrap_or(train_defaults.l1),
        l2: file.train.l2.unwrap_or(train_defaults.l2),
        dropout_rate: file.train.dropout_rate.unwrap_or(train_defaults.dropout_rate),
        early_stop_patience: file
            .train
            .early_stop_patience
            .unwrap_or(train_defaults.early_stop_patience),
        seed,
        threshold: overrides
            .threshold
            .or(file.train.threshold)
            .unwrap_or(train_defaults.threshold),
    };

    let normalization: NormMethod =
        parse_enum(&file.preprocess.normalization, NormMethod::ZScore)?;
    let pipeline_defaults = PipelineConfig::default();
    let preprocess = PipelineConfig {
        normalization,
        top_k_features: overrides
            .top_k_features
            .or(file.preprocess.top_k_features)
            .or(pipeline_defaults.top_k_features),
    };
    let smote_defaults = SmoteConfig::default();
    let smote = if overrides.no_smote || file.preprocess.no_smote.unwrap_or(false) {
        None
    } else {
        let method = match file.preprocess.smote.method.as_deref() {
            None | Some("smote") => ImbalanceMethod::Smote,
            Some("duplicate") => ImbalanceMethod::Duplicate,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown oversampling method '{other}' (expected smote or duplicate)"
                )))
            }
        };
        Some(SmoteConfig {
            method,
            k_neighbors: file.preprocess.smote.k_neighbors.unwrap_or(smote_defaults.k_neighbors),
            target_ratio: file
                .preprocess
                .smote
                .target_ratio
                .unwrap_or(smote_defaults.target_ratio),
        })
    };

    let data = if overrides.data.is_empty() { file.data } else { overrides.data.clone() };
    Ok(ResolvedConfig {
        data,
        out: overrides.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
        seed,
        model,
        train,
        preprocess,
        smote,
        benign_tokens: file
            .preprocess
            .benign_tokens
            .unwrap_or_else(|| vec!["BENIGN".to_string()]),
        train_fraction: file.preprocess.train_fraction.unwrap_or(0.8),
    })
}
