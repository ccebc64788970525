//! The eight parameter-update rules of the optimizer/activation grid, behind
//! one step interface.
//!
//! The exact recurrences, conventions, and default hyperparameters are
//! transcribed in `docs/optimizer-rules.md`; that document is the normative
//! reference the unit-test oracles are coded against. Bias correction is
//! applied for Adam, AdaMax, and Nadam. FTRL is the proximal variant with
//! per-coordinate adaptive rates; its rate scale alpha is the config's
//! `learning_rate`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neuralcore::{Activation, Gradients, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    AdaDelta,
    AdaGrad,
    AdaMax,
    Ftrl,
    Nadam,
    RmsProp,
}

impl OptimizerKind {
    /// Column order of the results grid.
    pub const ALL: [OptimizerKind; 8] = [
        OptimizerKind::Adam,
        OptimizerKind::AdaDelta,
        OptimizerKind::AdaGrad,
        OptimizerKind::AdaMax,
        OptimizerKind::Ftrl,
        OptimizerKind::Nadam,
        OptimizerKind::RmsProp,
        OptimizerKind::Sgd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "SGD",
            OptimizerKind::Adam => "Adam",
            OptimizerKind::AdaDelta => "AdaDelta",
            OptimizerKind::AdaGrad => "AdaGrad",
            OptimizerKind::AdaMax => "AdaMax",
            OptimizerKind::Ftrl => "FTRL",
            OptimizerKind::Nadam => "Nadam",
            OptimizerKind::RmsProp => "RMSProp",
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            "adadelta" => Ok(OptimizerKind::AdaDelta),
            "adagrad" => Ok(OptimizerKind::AdaGrad),
            "adamax" => Ok(OptimizerKind::AdaMax),
            "ftrl" => Ok(OptimizerKind::Ftrl),
            "nadam" => Ok(OptimizerKind::Nadam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            other => Err(format!("unknown optimizer '{other}'")),
        }
    }
}

/// All 8x3 optimizer/activation combinations, in grid order
/// (activations as rows, optimizers as columns).
pub fn grid_combinations() -> Vec<(Activation, OptimizerKind)> {
    let mut out = Vec::with_capacity(24);
    for act in Activation::ALL {
        for kind in OptimizerKind::ALL {
            out.push((act, kind));
        }
    }
    out
}

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("no parameters to optimize")]
    NoParameters,
    #[error("shape mismatch: state has {state} parameter tensors, step got {got}")]
    SlotCountMismatch { state: usize, got: usize },
    #[error("shape mismatch on parameter '{param}': state {state}, step {got}")]
    SlotShapeMismatch { param: String, state: usize, got: usize },
    #[error("non-finite gradient in parameter '{param}'")]
    NonFiniteGradient { param: String },
}

/// Hyperparameters for one optimizer. Fields not used by `kind` are ignored
/// but always serialized, so run manifests carry the full resolved
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// First-moment decay for Adam, AdaMax, Nadam.
    pub beta1: f64,
    /// Second-moment decay for Adam, Nadam; infinity-norm decay for AdaMax.
    pub beta2: f64,
    /// Accumulator decay for AdaDelta and RMSProp.
    pub rho: f64,
    pub epsilon: f64,
    /// SGD momentum; 0 disables the velocity buffer.
    pub momentum: f64,
    pub ftrl_beta: f64,
    pub ftrl_l1: f64,
    pub ftrl_l2: f64,
}

impl OptimizerConfig {
    /// Defaults follow each rule's originating publication; see
    /// `docs/optimizer-rules.md`.
    pub fn defaults(kind: OptimizerKind) -> Self {
        let base = OptimizerConfig {
            kind,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            rho: 0.9,
            epsilon: 1e-8,
            momentum: 0.0,
            ftrl_beta: 1.0,
            ftrl_l1: 0.0,
            ftrl_l2: 0.0,
        };
        match kind {
            OptimizerKind::Sgd => OptimizerConfig { learning_rate: 0.01, ..base },
            OptimizerKind::Adam | OptimizerKind::Nadam | OptimizerKind::AdaMax => base,
            OptimizerKind::AdaDelta => OptimizerConfig {
                learning_rate: 1.0,
                rho: 0.95,
                epsilon: 1e-6,
                ..base
            },
            OptimizerKind::AdaGrad => OptimizerConfig {
                learning_rate: 0.01,
                epsilon: 1e-10,
                ..base
            },
            OptimizerKind::RmsProp => base,
            OptimizerKind::Ftrl => OptimizerConfig { learning_rate: 0.05, ..base },
        }
    }

    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |msg: String| Err(OptimizerError::InvalidHyperparameter(msg));
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad(format!("learning_rate {} must be finite and >= 0", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad(format!("beta1 {} must be in [0,1)", self.beta1));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("beta2 {} must be in [0,1)", self.beta2));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho {} must be in [0,1)", self.rho));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return bad(format!("epsilon {} must be finite and >= 0", self.epsilon));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} must be in [0,1)", self.momentum));
        }
        if self.ftrl_beta < 0.0 || self.ftrl_l1 < 0.0 || self.ftrl_l2 < 0.0 {
            return bad("ftrl beta/l1/l2 must be >= 0".to_string());
        }
        Ok(())
    }
}

/// Per-parameter auxiliary buffers for one optimizer kind.
#[derive(Debug, Clone)]
enum Slot {
    Sgd { velocity: Option<Vec<f64>> },
    Adam { m: Vec<f64>, v: Vec<f64> },
    AdaDelta { acc_grad: Vec<f64>, acc_update: Vec<f64> },
    AdaGrad { acc: Vec<f64> },
    AdaMax { m: Vec<f64>, u: Vec<f64> },
    Ftrl { z: Vec<f64>, n: Vec<f64> },
    Nadam { m: Vec<f64>, v: Vec<f64> },
    RmsProp { acc: Vec<f64> },
}

impl Slot {
    fn new(kind: OptimizerKind, len: usize, momentum: f64) -> Self {
        let z = || vec![0.0; len];
        match kind {
            OptimizerKind::Sgd => Slot::Sgd {
                velocity: if momentum == 0.0 { None } else { Some(z()) },
            },
            OptimizerKind::Adam => Slot::Adam { m: z(), v: z() },
            OptimizerKind::AdaDelta => Slot::AdaDelta { acc_grad: z(), acc_update: z() },
            OptimizerKind::AdaGrad => Slot::AdaGrad { acc: z() },
            OptimizerKind::AdaMax => Slot::AdaMax { m: z(), u: z() },
            OptimizerKind::Ftrl => Slot::Ftrl { z: z(), n: z() },
            OptimizerKind::Nadam => Slot::Nadam { m: z(), v: z() },
            OptimizerKind::RmsProp => Slot::RmsProp { acc: z() },
        }
    }

    fn len(&self) -> usize {
        match self {
            Slot::Sgd { velocity } => velocity.as_ref().map_or(0, Vec::len),
            Slot::Adam { m, .. } | Slot::Nadam { m, .. } | Slot::AdaMax { m, .. } => m.len(),
            Slot::AdaDelta { acc_grad, .. } => acc_grad.len(),
            Slot::AdaGrad { acc } | Slot::RmsProp { acc } => acc.len(),
            Slot::Ftrl { z, .. } => z.len(),
        }
    }

    /// Sum of squares of every buffer, for training diagnostics.
    fn norm_sq(&self) -> f64 {
        let ss = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        match self {
            Slot::Sgd { velocity } => velocity.as_ref().map_or(0.0, |v| ss(v)),
            Slot::Adam { m, v } | Slot::Nadam { m, v } => ss(m) + ss(v),
            Slot::AdaDelta { acc_grad, acc_update } => ss(acc_grad) + ss(acc_update),
            Slot::AdaGrad { acc } | Slot::RmsProp { acc } => ss(acc),
            Slot::AdaMax { m, u } => ss(m) + ss(u),
            Slot::Ftrl { z, n } => ss(z) + ss(n),
        }
    }
}

/// Optimizer state for one training run: auxiliary buffers mirroring each
/// parameter tensor plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    config: OptimizerConfig,
    t: u64,
    names: Vec<String>,
    sizes: Vec<usize>,
    slots: Vec<Slot>,
}

pub fn init_optimizer(
    config: &OptimizerConfig,
    parameters: &[(String, usize)],
) -> Result<OptimizerState, OptimizerError> {
    config.validate()?;
    if parameters.is_empty() {
        return Err(OptimizerError::NoParameters);
    }
    let slots = parameters
        .iter()
        .map(|(_, len)| Slot::new(config.kind, *len, config.momentum))
        .collect();
    Ok(OptimizerState {
        config: config.clone(),
        t: 0,
        names: parameters.iter().map(|(n, _)| n.clone()).collect(),
        sizes: parameters.iter().map(|(_, l)| *l).collect(),
        slots,
    })
}

impl OptimizerState {
    pub fn from_network(
        config: &OptimizerConfig,
        network: &crate::neuralcore::Network,
    ) -> Result<Self, OptimizerError> {
        let parameters: Vec<(String, usize)> = network
            .param_slots()
            .iter()
            .map(|s| (s.name.clone(), s.tensor.len()))
            .collect();
        init_optimizer(config, &parameters)
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Per-parameter auxiliary buffer views, for tests and diagnostics.
    pub fn slot_buffer_lens(&self) -> Vec<usize> {
        self.slots.iter().map(Slot::len).collect()
    }

    /// Euclidean norm over all auxiliary buffers, for abort diagnostics.
    pub fn state_norm(&self) -> f64 {
        self.slots.iter().map(Slot::norm_sq).sum::<f64>().sqrt()
    }

    /// Apply one update step in place. `params` and `grads` must mirror the
    /// shapes the state was initialized with.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &Gradients,
    ) -> Result<(), OptimizerError> {
        if params.len() != self.slots.len() || grads.len() != self.slots.len() {
            return Err(OptimizerError::SlotCountMismatch {
                state: self.slots.len(),
                got: params.len().max(grads.len()),
            });
        }
        #[allow(clippy::needless_range_loop)]
        for i in 0..params.len() {
            if params[i].len() != self.sizes[i] || grads.get(i).len() != self.sizes[i] {
                return Err(OptimizerError::SlotShapeMismatch {
                    param: self.names[i].clone(),
                    state: self.sizes[i],
                    got: params[i].len().max(grads.get(i).len()),
                });
            }
            if grads.get(i).data().iter().any(|g| !g.is_finite()) {
                return Err(OptimizerError::NonFiniteGradient { param: self.names[i].clone() });
            }
        }
        self.t += 1;
        let t = self.t;
        let cfg = self.config.clone();
        for (i, slot) in self.slots.iter_mut().enumerate() {
            let w = params[i].data_mut();
            let g = grads.get(i).data();
            step_slot(slot, &cfg, t, w, g);
        }
        Ok(())
    }
}

fn step_slot(slot: &mut Slot, cfg: &OptimizerConfig, t: u64, w: &mut [f64], g: &[f64]) {
    let lr = cfg.learning_rate;
    match slot {
        Slot::Sgd { velocity: None } => {
            for j in 0..w.len() {
                w[j] -= lr * g[j];
            }
        }
        Slot::Sgd { velocity: Some(v) } => {
            for j in 0..w.len() {
                v[j] = cfg.momentum * v[j] + g[j];
                w[j] -= lr * v[j];
            }
        }
        Slot::Adam { m, v } => {
            let bc1 = 1.0 - cfg.beta1.powi(t as i32);
            let bc2 = 1.0 - cfg.beta2.powi(t as i32);
            for j in 0..w.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                w[j] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        Slot::AdaDelta { acc_grad, acc_update } => {
            for j in 0..w.len() {
                acc_grad[j] = cfg.rho * acc_grad[j] + (1.0 - cfg.rho) * g[j] * g[j];
                let delta = -((acc_update[j] + cfg.epsilon).sqrt()
                    / (acc_grad[j] + cfg.epsilon).sqrt())
                    * g[j];
                acc_update[j] = cfg.rho * acc_update[j] + (1.0 - cfg.rho) * delta * delta;
                w[j] += lr * delta;
            }
        }
        Slot::AdaGrad { acc } => {
            for j in 0..w.len() {
                if g[j] == 0.0 {
                    continue;
                }
                acc[j] += g[j] * g[j];
                w[j] -= lr * g[j] / (acc[j].sqrt() + cfg.epsilon);
            }
        }
        Slot::AdaMax { m, u } => {
            let bc1 = 1.0 - cfg.beta1.powi(t as i32);
            for j in 0..w.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                u[j] = (cfg.beta2 * u[j]).max(g[j].abs());
                w[j] -= (lr / bc1) * m[j] / (u[j] + cfg.epsilon);
            }
        }
        Slot::Ftrl { z, n } => {
            // learning_rate is the FTRL alpha; inactive coordinates
            // (zero gradient) are skipped, per-coordinate style
            for j in 0..w.len() {
                if g[j] == 0.0 {
                    continue;
                }
                let n_new = n[j] + g[j] * g[j];
                let sigma = (n_new.sqrt() - n[j].sqrt()) / lr;
                z[j] += g[j] - sigma * w[j];
                n[j] = n_new;
                if z[j].abs() <= cfg.ftrl_l1 {
                    w[j] = 0.0;
                } else {
                    let sign = if z[j] >= 0.0 { 1.0 } else { -1.0 };
                    w[j] = -(z[j] - sign * cfg.ftrl_l1)
                        / ((cfg.ftrl_beta + n[j].sqrt()) / lr + cfg.ftrl_l2);
                }
            }
        }
        Slot::Nadam { m, v } => {
            let bc1_next = 1.0 - cfg.beta1.powi(t as i32 + 1);
            let bc1 = 1.0 - cfg.beta1.powi(t as i32);
            let bc2 = 1.0 - cfg.beta2.powi(t as i32);
            for j in 0..w.len() {
                m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1_next;
                let v_hat = v[j] / bc2;
                let direction = cfg.beta1 * m_hat + (1.0 - cfg.beta1) * g[j] / bc1;
                w[j] -= lr * direction / (v_hat.sqrt() + cfg.epsilon);
            }
        }
        Slot::RmsProp { acc } => {
            for j in 0..w.len() {
                acc[j] = cfg.rho * acc[j] + (1.0 - cfg.rho) * g[j] * g[j];
                if g[j] != 0.0 {
                    w[j] -= lr * g[j] / (acc[j].sqrt() + cfg.epsilon);
                }
            }
        }
    }
}
