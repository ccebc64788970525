//! Central finite-difference validation of the analytic gradients.

use super::loss::{binary_cross_entropy, BCE_EPSILON};
use super::network::{Network, Regularization};
use super::tensor::Tensor;
use super::NeuralError;

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_param: Vec<ParamCheck>,
    pub max_rel_error: f64,
    /// Largest |analytic - numeric| seen, including differences inside the
    /// noise floor; diagnostic only.
    pub max_abs_diff: f64,
    pub pass: bool,
}

/// Central differences of an O(1) loss in f64 carry absolute rounding noise
/// of roughly eps * |loss| / h (~1e-11 at h = 1e-5). Discrepancies below
/// this resolution carry no signal about the analytic gradient, so they
/// count as exact agreement; a genuinely wrong gradient term sits orders of
/// magnitude above it and is still caught.
const FD_NOISE_ATOL: f64 = 1e-10;

/// relative error = |ga - gn| / max(|ga|, |gn|, 1e-8), with differences
/// inside the finite-difference noise floor treated as zero.
fn rel_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= FD_NOISE_ATOL {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compare the analytic gradient of `BCE(forward(batch), targets) + penalty`
/// against central finite differences with step `h`, parameter by parameter.
///
/// The same `seed` is used for every forward evaluation so dropout masks are
/// identical on both sides of each perturbation. Intended for small networks
/// (≤ 5k parameters) and small batches (≤ 8 rows).
pub fn gradient_check(
    network: &mut Network,
    batch: &Tensor,
    targets: &Tensor,
    reg: &Regularization,
    h: f64,
    tol: f64,
    seed: u64,
) -> Result<GradCheckReport, NeuralError> {
    let loss_at = |net: &Network| -> Result<f64, NeuralError> {
        let (probs, _) = net.forward(batch, true, seed)?;
        let (data_loss, _) = binary_cross_entropy(&probs, targets, BCE_EPSILON)?;
        Ok(data_loss + net.penalty_loss(reg))
    };

    let (probs, cache) = network.forward(batch, true, seed)?;
    let (_, loss_grad) = binary_cross_entropy(&probs, targets, BCE_EPSILON)?;
    let analytic = network.backward(&cache, &loss_grad, reg)?;

    let mut per_param = Vec::new();
    let mut overall_max = 0.0_f64;
    let mut max_abs_diff = 0.0_f64;
    let n_params = analytic.len();
    for pi in 0..n_params {
        let name = analytic.name(pi).to_string();
        let len = analytic.get(pi).len();
        let mut worst = 0.0_f64;
        for j in 0..len {
            let original = network.params_mut()[pi].data()[j];
            network.params_mut()[pi].data_mut()[j] = original + h;
            let plus = loss_at(network)?;
            network.params_mut()[pi].data_mut()[j] = original - h;
            let minus = loss_at(network)?;
            network.params_mut()[pi].data_mut()[j] = original;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(rel_error(analytic.get(pi).data()[j], numeric));
            max_abs_diff = max_abs_diff.max((analytic.get(pi).data()[j] - numeric).abs());
        }
        overall_max = overall_max.max(worst);
        per_param.push(ParamCheck { name, max_rel_error: worst, pass: worst <= tol });
    }
    Ok(GradCheckReport {
        per_param,
        max_rel_error: overall_max,
        max_abs_diff,
        pass: overall_max <= tol,
    })
}
