//! Minimal neural-network kernel: tensors, layers with hand-derived
//! gradients, binary cross-entropy, and a finite-difference gradient checker.
//!
//! Everything is `f64`. Forward passes are deterministic given the weights,
//! the input, and the dropout seed; batch reductions run in a fixed order so
//! training is bitwise reproducible.

mod activation;
mod gradcheck;
mod layer;
mod loss;
mod network;
mod tensor;

pub use activation::{sigmoid, Activation};
pub use gradcheck::{gradient_check, GradCheckReport, ParamCheck};
pub use layer::{Conv1d, Dense, Dropout, Layer, LayerCache, Lstm, MaxPool1d, ParamSlot};
pub use loss::{binary_cross_entropy, BCE_EPSILON};
pub use network::{
    load_network, network_from_parts, network_to_parts, save_network, ForwardCache, Gradients,
    Network, Regularization, NETWORK_FORMAT_VERSION, PROB_EPS,
};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    ShapeMismatch {
        op: String,
        expected: String,
        found: String,
    },
    #[error("kernel size {kernel} exceeds input length {input}")]
    KernelTooLarge { kernel: usize, input: usize },
    #[error("pool size {pool} exceeds input length {input}")]
    PoolTooLarge { pool: usize, input: usize },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("stale forward cache: {0}")]
    StaleCache(String),
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NeuralError {
    pub(crate) fn shape(op: &str, expected: &[usize], found: &[usize]) -> Self {
        let fmt = |s: &[usize]| {
            let parts: Vec<String> = s
                .iter()
                .map(|&d| if d == 0 { "*".to_string() } else { d.to_string() })
                .collect();
            format!("[{}]", parts.join(", "))
        };
        NeuralError::ShapeMismatch {
            op: op.to_string(),
            expected: fmt(expected),
            found: fmt(found),
        }
    }
}
