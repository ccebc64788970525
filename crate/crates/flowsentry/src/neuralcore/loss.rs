//! Binary cross-entropy with prediction clipping.

use super::tensor::Tensor;
use super::NeuralError;

/// Mean binary cross-entropy over a batch, with predictions clipped into
/// `[epsilon, 1 - epsilon]` before the logs. Returns the loss and
/// `dL/dprediction`; the gradient is zero wherever clipping was active.
pub fn binary_cross_entropy(
    pred: &Tensor,
    target: &Tensor,
    epsilon: f64,
) -> Result<(f64, Tensor), NeuralError> {
    if pred.shape() != target.shape() {
        return Err(NeuralError::shape("binary_cross_entropy", pred.shape(), target.shape()));
    }
    debug_assert!(target.data().iter().all(|&t| t == 0.0 || t == 1.0), "targets must be 0/1");
    let n = pred.len();
    if n == 0 {
        return Err(NeuralError::shape("binary_cross_entropy", &[1], &[0]));
    }
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        let raw = pred.data()[i];
        let p = raw.clamp(epsilon, 1.0 - epsilon);
        let t = target.data()[i];
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        if raw >= epsilon && raw <= 1.0 - epsilon {
            grad.data_mut()[i] = (-t / p + (1.0 - t) / (1.0 - p)) * inv_n;
        }
    }
    Ok((loss * inv_n, grad))
}

pub const BCE_EPSILON: f64 = 1e-7;
