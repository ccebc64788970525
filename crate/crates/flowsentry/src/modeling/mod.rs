//! Model families, architecture builders, training, k-fold cross-validation,
//! the optimizer/activation grid, and trained-model artifacts.

mod crossval;
mod grid;
mod train;

pub use crossval::{cross_validate, CvAggregate, CvFoldAudit, CvReport};
pub use grid::run_optimizer_activation_grid;
pub use train::{
    ensemble_predict, load_model, train, Classification, TrainConfig, TrainEpoch, TrainHistory,
    TrainedModel, MODEL_ARTIFACT_VERSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::EvalError;
use crate::neuralcore::{
    Activation, Conv1d, Dense, Dropout, Layer, Lstm, MaxPool1d, Network, NeuralError,
};
use crate::optimizers::OptimizerError;
use crate::preprocess::PreprocessError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch}; {diagnostics}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        diagnostics: String,
    },
    #[error("invalid training setup: {0}")]
    InvalidSetup(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Ann,
    Cnn,
    Lstm,
    /// Soft-voting combination of trained members; not directly buildable.
    Ensemble,
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Ann => "ANN",
            ModelFamily::Cnn => "CNN",
            ModelFamily::Lstm => "LSTM",
            ModelFamily::Ensemble => "Ensemble",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ann" => Ok(ModelFamily::Ann),
            "cnn" => Ok(ModelFamily::Cnn),
            "lstm" => Ok(ModelFamily::Lstm),
            "ensemble" => Ok(ModelFamily::Ensemble),
            other => Err(format!("unknown model family '{other}'")),
        }
    }
}

/// Architecture description. Only the fields of the chosen family matter;
/// the rest keep their defaults and are serialized for the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub input_dim: usize,
    pub activation: Activation,
    /// ANN hidden layer widths; empty means plain logistic regression.
    pub hidden_sizes: Vec<usize>,
    pub filters: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub dense_units: usize,
    pub timesteps: usize,
    pub hidden_units: usize,
}

impl ModelSpec {
    pub fn ann(input_dim: usize) -> Self {
        ModelSpec {
            family: ModelFamily::Ann,
            input_dim,
            activation: Activation::Relu,
            hidden_sizes: vec![64, 32],
            filters: 32,
            kernel_size: 3,
            pool_size: 2,
            dense_units: 64,
            timesteps: 10,
            hidden_units: 64,
        }
    }

    pub fn cnn(input_dim: usize) -> Self {
        ModelSpec { family: ModelFamily::Cnn, ..ModelSpec::ann(input_dim) }
    }

    pub fn lstm(input_dim: usize) -> Self {
        ModelSpec { family: ModelFamily::Lstm, ..ModelSpec::ann(input_dim) }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    /// Build and initialize the network for this spec.
    pub fn build(&self, seed: u64) -> Result<Network, ModelError> {
        match self.family {
            ModelFamily::Ann => {
                build_ann(self.input_dim, &self.hidden_sizes, self.activation, seed)
            }
            ModelFamily::Cnn => build_cnn(
                self.input_dim,
                self.filters,
                self.kernel_size,
                self.pool_size,
                self.dense_units,
                self.activation,
                seed,
            ),
            ModelFamily::Lstm => {
                build_lstm(self.input_dim, self.timesteps, self.hidden_units, seed)
            }
            ModelFamily::Ensemble => Err(ModelError::InvalidSetup(
                "an ensemble is assembled from trained members, not built".into(),
            )),
        }
    }
}

/// Dense stack: per hidden layer `dense + activation + dropout slot`, then
/// `dense(1) + sigmoid`. Empty `hidden_sizes` degenerates to logistic
/// regression.
pub fn build_ann(
    input_dim: usize,
    hidden_sizes: &[usize],
    activation: Activation,
    seed: u64,
) -> Result<Network, ModelError> {
    if input_dim == 0 {
        return Err(ModelError::InvalidSetup("input_dim must be >= 1".into()));
    }
    let mut layers = Vec::new();
    let mut width = input_dim;
    for &h in hidden_sizes {
        layers.push(Layer::Dense(Dense::new(width, h)));
        layers.push(Layer::Activation { activation });
        layers.push(Layer::Dropout(Dropout::new(0.0)));
        width = h;
    }
    layers.push(Layer::Dense(Dense::new(width, 1)));
    layers.push(Layer::Activation { activation: Activation::Sigmoid });
    let mut net = Network::new(vec![input_dim], layers)?;
    net.initialize(seed);
    Ok(net)
}

/// Features viewed as a length-`input_dim` single-channel sequence:
/// `conv1d + activation + maxpool + flatten + dense + activation + dropout
/// slot + dense(1) + sigmoid`.
pub fn build_cnn(
    input_dim: usize,
    filters: usize,
    kernel_size: usize,
    pool_size: usize,
    dense_units: usize,
    activation: Activation,
    seed: u64,
) -> Result<Network, ModelError> {
    if kernel_size > input_dim {
        return Err(NeuralError::KernelTooLarge { kernel: kernel_size, input: input_dim }.into());
    }
    let conv_out = (input_dim - kernel_size) + 1;
    if pool_size > conv_out {
        return Err(NeuralError::PoolTooLarge { pool: pool_size, input: conv_out }.into());
    }
    let pooled = (conv_out - pool_size) / pool_size + 1;
    let flat = pooled * filters;
    let layers = vec![
        Layer::Conv1d(Conv1d::new(kernel_size, 1, filters, 1)),
        Layer::Activation { activation },
        Layer::MaxPool1d(MaxPool1d::new(pool_size)),
        Layer::Flatten,
        Layer::Dense(Dense::new(flat, dense_units)),
        Layer::Activation { activation },
        Layer::Dropout(Dropout::new(0.0)),
        Layer::Dense(Dense::new(dense_units, 1)),
        Layer::Activation { activation: Activation::Sigmoid },
    ];
    let mut net = Network::new(vec![input_dim], layers)?;
    net.initialize(seed);
    Ok(net)
}

/// Features zero-padded to the next multiple of `timesteps` and viewed as a
/// `[timesteps, width]` sequence: `lstm + dense(1) + sigmoid`.
pub fn build_lstm(
    input_dim: usize,
    timesteps: usize,
    hidden_units: usize,
    seed: u64,
) -> Result<Network, ModelError> {
    if input_dim == 0 || timesteps == 0 || hidden_units == 0 {
        return Err(ModelError::InvalidSetup(
            "input_dim, timesteps, and hidden_units must be >= 1".into(),
        ));
    }
    let width = input_dim.div_ceil(timesteps);
    let layers = vec![
        Layer::Lstm(Lstm::new(timesteps, width, hidden_units)),
        Layer::Dense(Dense::new(hidden_units, 1)),
        Layer::Activation { activation: Activation::Sigmoid },
    ];
    let mut net = Network::new(vec![input_dim], layers)?;
    net.initialize(seed);
    Ok(net)
}
