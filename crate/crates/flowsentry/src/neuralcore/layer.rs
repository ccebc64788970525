//! Network layers with exact analytic gradients.
//!
//! Every layer implements a `forward` that returns the output plus a cache of
//! whatever the matching `backward` needs, and a `backward` that maps the
//! output gradient to an input gradient and per-parameter gradients. The
//! backward passes are hand-derived; `gradcheck` validates them against
//! central finite differences.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::tensor::{matmul_a_bt, matmul_acc, matmul_at_b, Tensor};
use super::NeuralError;

/// Fully connected layer: `y = x·W + b` with `W: [in, out]`, `b: [out]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn new(input: usize, output: usize) -> Self {
        Dense {
            weights: Tensor::zeros(&[input, output]),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn input_size(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn output_size(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Tensor), NeuralError> {
        let (n_in, n_out) = (self.input_size(), self.output_size());
        if input.rank() != 2 || input.shape()[1] != n_in {
            return Err(NeuralError::shape("dense forward", &[0, n_in], input.shape()));
        }
        let batch = input.shape()[0];
        let mut out = Tensor::zeros(&[batch, n_out]);
        for b in 0..batch {
            out.data_mut()[b * n_out..(b + 1) * n_out].copy_from_slice(self.bias.data());
        }
        matmul_acc(input.data(), self.weights.data(), batch, n_in, n_out, out.data_mut());
        Ok((out, input.clone()))
    }

    /// Returns `(grad_input, grad_weights, grad_bias)`.
    pub fn backward(&self, cached_input: &Tensor, grad_out: &Tensor) -> (Tensor, Tensor, Tensor) {
        let (n_in, n_out) = (self.input_size(), self.output_size());
        let batch = cached_input.shape()[0];
        let mut grad_w = Tensor::zeros(&[n_in, n_out]);
        matmul_at_b(cached_input.data(), grad_out.data(), batch, n_in, n_out, grad_w.data_mut());
        let mut grad_b = Tensor::zeros(&[n_out]);
        for b in 0..batch {
            for o in 0..n_out {
                grad_b.data_mut()[o] += grad_out.data()[b * n_out + o];
            }
        }
        let mut grad_in = Tensor::zeros(&[batch, n_in]);
        matmul_a_bt(grad_out.data(), self.weights.data(), batch, n_out, n_in, grad_in.data_mut());
        (grad_in, grad_w, grad_b)
    }
}

/// 1-D convolution in the cross-correlation convention (no kernel flip),
/// valid padding. Kernels are stored `[kernel_size, in_channels, filters]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Conv1d {
    pub kernels: Tensor,
    pub bias: Tensor,
    pub stride: usize,
}

impl Conv1d {
    pub fn new(kernel_size: usize, in_channels: usize, filters: usize, stride: usize) -> Self {
        assert!(stride >= 1, "stride must be at least 1");
        Conv1d {
            kernels: Tensor::zeros(&[kernel_size, in_channels, filters]),
            bias: Tensor::zeros(&[filters]),
            stride,
        }
    }

    pub fn kernel_size(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[2]
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize, NeuralError> {
        if self.kernel_size() > input_len {
            return Err(NeuralError::KernelTooLarge {
                kernel: self.kernel_size(),
                input: input_len,
            });
        }
        Ok((input_len - self.kernel_size()) / self.stride + 1)
    }

    /// Accepts `[batch, length, channels]`, or `[batch, length*channels]`
    /// which is viewed as `[batch, length, channels]`.
    fn to_input3(&self, input: &Tensor) -> Result<Tensor, NeuralError> {
        let cin = self.in_channels();
        match input.rank() {
            3 if input.shape()[2] == cin => Ok(input.clone()),
            2 if input.shape()[1].is_multiple_of(cin) => {
                let len = input.shape()[1] / cin;
                Ok(input.clone().reshape(&[input.shape()[0], len, cin]))
            }
            _ => Err(NeuralError::shape("conv1d forward", &[0, 0, cin], input.shape())),
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Tensor), NeuralError> {
        let input3 = self.to_input3(input)?;
        let (batch, len, cin) = (input3.shape()[0], input3.shape()[1], input3.shape()[2]);
        let (k, f) = (self.kernel_size(), self.filters());
        let out_len = self.output_len(len)?;
        let mut out = Tensor::zeros(&[batch, out_len, f]);
        let kd = self.kernels.data();
        for b in 0..batch {
            for t in 0..out_len {
                let base = (b * out_len + t) * f;
                out.data_mut()[base..base + f].copy_from_slice(self.bias.data());
                for kk in 0..k {
                    let irow = (b * len + t * self.stride + kk) * cin;
                    for c in 0..cin {
                        let x = input3.data()[irow + c];
                        if x == 0.0 {
                            continue;
                        }
                        let krow = (kk * cin + c) * f;
                        for ff in 0..f {
                            out.data_mut()[base + ff] += x * kd[krow + ff];
                        }
                    }
                }
            }
        }
        Ok((out, input3))
    }

    /// Returns `(grad_input3, grad_kernels, grad_bias)`.
    pub fn backward(&self, cached_input3: &Tensor, grad_out: &Tensor) -> (Tensor, Tensor, Tensor) {
        let (batch, len, cin) =
            (cached_input3.shape()[0], cached_input3.shape()[1], cached_input3.shape()[2]);
        let (k, f) = (self.kernel_size(), self.filters());
        let out_len = grad_out.shape()[1];
        let mut grad_k = Tensor::zeros(&[k, cin, f]);
        let mut grad_b = Tensor::zeros(&[f]);
        let mut grad_in = Tensor::zeros(&[batch, len, cin]);
        let kd = self.kernels.data();
        for b in 0..batch {
            for t in 0..out_len {
                let gbase = (b * out_len + t) * f;
                let go = &grad_out.data()[gbase..gbase + f];
                for (ff, &g) in go.iter().enumerate() {
                    grad_b.data_mut()[ff] += g;
                }
                for kk in 0..k {
                    let irow = (b * len + t * self.stride + kk) * cin;
                    for c in 0..cin {
                        let x = cached_input3.data()[irow + c];
                        let krow = (kk * cin + c) * f;
                        let mut gsum = 0.0;
                        for (ff, &g) in go.iter().enumerate() {
                            grad_k.data_mut()[krow + ff] += x * g;
                            gsum += g * kd[krow + ff];
                        }
                        grad_in.data_mut()[irow + c] += gsum;
                    }
                }
            }
        }
        (grad_in, grad_k, grad_b)
    }
}

/// Non-overlapping 1-D max pooling (stride = pool size). Ties pick the
/// earliest position so the backward routing is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxPool1d {
    pub pool: usize,
}

impl MaxPool1d {
    pub fn new(pool: usize) -> Self {
        assert!(pool >= 1, "pool size must be at least 1");
        MaxPool1d { pool }
    }

    pub fn output_len(&self, input_len: usize) -> Result<usize, NeuralError> {
        if self.pool > input_len {
            return Err(NeuralError::PoolTooLarge {
                pool: self.pool,
                input: input_len,
            });
        }
        Ok((input_len - self.pool) / self.pool + 1)
    }

    /// Returns `(output, (input_shape, argmax))` where `argmax` holds the flat
    /// input index that produced each output element.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, Vec<usize>), NeuralError> {
        if input.rank() != 3 {
            return Err(NeuralError::shape("maxpool1d forward", &[0, 0, 0], input.shape()));
        }
        let (batch, len, ch) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let out_len = self.output_len(len)?;
        let mut out = Tensor::zeros(&[batch, out_len, ch]);
        let mut argmax = vec![0usize; batch * out_len * ch];
        for b in 0..batch {
            for t in 0..out_len {
                for c in 0..ch {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for p in 0..self.pool {
                        let idx = (b * len + t * self.pool + p) * ch + c;
                        let v = input.data()[idx];
                        if v > best {
                            best = v;
                            best_idx = idx;
                        }
                    }
                    let o = (b * out_len + t) * ch + c;
                    out.data_mut()[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
        Ok((out, argmax))
    }

    pub fn backward(&self, input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
        let mut grad_in = Tensor::zeros(input_shape);
        for (o, &src) in argmax.iter().enumerate() {
            grad_in.data_mut()[src] += grad_out.data()[o];
        }
        grad_in
    }
}

/// Inverted dropout: at train time each element is kept with probability
/// `1 - rate` and scaled by `1/(1 - rate)`, so inference is a plain identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn new(rate: f64) -> Self {
        assert!((0.0..1.0).contains(&rate), "drop rate must be in [0,1)");
        Dropout { rate }
    }

    /// Returns `(output, mask)`. The mask holds the per-element scale factor
    /// (0 or 1/(1-rate)); `None` when dropout was inactive.
    pub fn forward(
        &self,
        input: &Tensor,
        training: bool,
        rng: &mut ChaCha8Rng,
    ) -> (Tensor, Option<Tensor>) {
        if !training || self.rate == 0.0 {
            return (input.clone(), None);
        }
        let scale = 1.0 / (1.0 - self.rate);
        let mut mask = Tensor::zeros(input.shape());
        let mut out = Tensor::zeros(input.shape());
        for i in 0..input.len() {
            if rng.gen::<f64>() >= self.rate {
                mask.data_mut()[i] = scale;
                out.data_mut()[i] = input.data()[i] * scale;
            }
        }
        (out, Some(mask))
    }

    pub fn backward(&self, mask: Option<&Tensor>, grad_out: &Tensor) -> Tensor {
        match mask {
            None => grad_out.clone(),
            Some(m) => {
                let data = grad_out
                    .data()
                    .iter()
                    .zip(m.data())
                    .map(|(&g, &s)| g * s)
                    .collect();
                Tensor::from_vec(grad_out.shape(), data)
            }
        }
    }
}

/// Standard LSTM over `[batch, timesteps, step_width]` input, returning the
/// final hidden state `[batch, hidden]`. Gate order is input, forget, cell
/// candidate, output; initial hidden and cell states are zero.
///
/// A rank-2 input `[batch, n]` with `n <= timesteps * step_width` is
/// zero-padded and viewed as a sequence, which is how flat flow features are
/// fed through the recurrent stack.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lstm {
    pub timesteps: usize,
    pub step_width: usize,
    pub hidden: usize,
    /// Input-to-hidden weights per gate, each `[step_width, hidden]`.
    pub w_x: [Tensor; 4],
    /// Hidden-to-hidden weights per gate, each `[hidden, hidden]`.
    pub w_h: [Tensor; 4],
    /// Gate biases, each `[hidden]`.
    pub b: [Tensor; 4],
}

pub const LSTM_GATE_NAMES: [&str; 4] = ["input", "forget", "cell", "output"];

#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Padded input `[batch, timesteps, step_width]`.
    input3: Tensor,
    /// Original flat width when the input arrived rank-2, else `None`.
    flat_width: Option<usize>,
    /// Per-timestep post-activation gates `[i, f, g, o]`, each `[batch, hidden]`.
    gates: Vec<[Tensor; 4]>,
    /// `h_{t-1}` as seen by each timestep.
    prev_hidden: Vec<Tensor>,
    /// `c_{t-1}` as seen by each timestep.
    prev_cell: Vec<Tensor>,
    /// `tanh(c_t)` per timestep.
    cell_tanh: Vec<Tensor>,
}

impl Lstm {
    pub fn new(timesteps: usize, step_width: usize, hidden: usize) -> Self {
        assert!(timesteps >= 1, "timesteps must be at least 1");
        let wx = || Tensor::zeros(&[step_width, hidden]);
        let wh = || Tensor::zeros(&[hidden, hidden]);
        let bb = || Tensor::zeros(&[hidden]);
        Lstm {
            timesteps,
            step_width,
            hidden,
            w_x: [wx(), wx(), wx(), wx()],
            w_h: [wh(), wh(), wh(), wh()],
            b: [bb(), bb(), bb(), bb()],
        }
    }

    pub fn parameter_count(&self) -> usize {
        4 * ((self.step_width + self.hidden) * self.hidden + self.hidden)
    }

    fn to_input3(&self, input: &Tensor) -> Result<(Tensor, Option<usize>), NeuralError> {
        let (t, f) = (self.timesteps, self.step_width);
        match input.rank() {
            3 if input.shape()[1] == t && input.shape()[2] == f => Ok((input.clone(), None)),
            2 if input.shape()[1] <= t * f => {
                let batch = input.shape()[0];
                let width = input.shape()[1];
                let mut padded = Tensor::zeros(&[batch, t, f]);
                for b in 0..batch {
                    padded.data_mut()[b * t * f..b * t * f + width]
                        .copy_from_slice(&input.data()[b * width..(b + 1) * width]);
                }
                Ok((padded, Some(width)))
            }
            _ => Err(NeuralError::shape("lstm forward", &[0, t, f], input.shape())),
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, LstmCache), NeuralError> {
        let (input3, flat_width) = self.to_input3(input)?;
        let (batch, t_steps, f) = (input3.shape()[0], self.timesteps, self.step_width);
        let h = self.hidden;
        let mut hidden = Tensor::zeros(&[batch, h]);
        let mut cell = Tensor::zeros(&[batch, h]);
        let mut cache = LstmCache {
            input3: input3.clone(),
            flat_width,
            gates: Vec::with_capacity(t_steps),
            prev_hidden: Vec::with_capacity(t_steps),
            prev_cell: Vec::with_capacity(t_steps),
            cell_tanh: Vec::with_capacity(t_steps),
        };
        for t in 0..t_steps {
            let x_t = {
                let mut x = Tensor::zeros(&[batch, f]);
                for b in 0..batch {
                    let src = (b * t_steps + t) * f;
                    x.data_mut()[b * f..(b + 1) * f]
                        .copy_from_slice(&input3.data()[src..src + f]);
                }
                x
            };
            // pre-activations per gate: z = x·Wx + h·Wh + b
            let mut gates: [Tensor; 4] = std::array::from_fn(|g| {
                let mut z = Tensor::zeros(&[batch, h]);
                for b in 0..batch {
                    z.data_mut()[b * h..(b + 1) * h].copy_from_slice(self.b[g].data());
                }
                matmul_acc(x_t.data(), self.w_x[g].data(), batch, f, h, z.data_mut());
                matmul_acc(hidden.data(), self.w_h[g].data(), batch, h, h, z.data_mut());
                z
            });
            for (g, gate) in gates.iter_mut().enumerate() {
                let act = if g == 2 { Activation::Tanh } else { Activation::Sigmoid };
                for v in gate.data_mut() {
                    *v = act.apply_scalar(*v);
                }
            }
            cache.prev_hidden.push(hidden.clone());
            cache.prev_cell.push(cell.clone());
            let mut new_cell = Tensor::zeros(&[batch, h]);
            for i in 0..batch * h {
                new_cell.data_mut()[i] = gates[1].data()[i] * cell.data()[i]
                    + gates[0].data()[i] * gates[2].data()[i];
            }
            let mut tanh_c = Tensor::zeros(&[batch, h]);
            for i in 0..batch * h {
                tanh_c.data_mut()[i] = new_cell.data()[i].tanh();
            }
            let mut new_hidden = Tensor::zeros(&[batch, h]);
            for i in 0..batch * h {
                new_hidden.data_mut()[i] = gates[3].data()[i] * tanh_c.data()[i];
            }
            cell = new_cell;
            hidden = new_hidden;
            cache.gates.push(gates);
            cache.cell_tanh.push(tanh_c);
        }
        Ok((hidden, cache))
    }

    /// Backpropagation through time. Returns the gradient with respect to the
    /// layer input (matching the rank the input arrived with) and per-gate
    /// parameter gradients ordered `w_x[0..4], w_h[0..4], b[0..4]`.
    pub fn backward(&self, cache: &LstmCache, grad_out: &Tensor) -> (Tensor, Vec<Tensor>) {
        let (batch, t_steps, f, h) =
            (cache.input3.shape()[0], self.timesteps, self.step_width, self.hidden);
        let mut grad_wx: Vec<Tensor> = (0..4).map(|_| Tensor::zeros(&[f, h])).collect();
        let mut grad_wh: Vec<Tensor> = (0..4).map(|_| Tensor::zeros(&[h, h])).collect();
        let mut grad_b: Vec<Tensor> = (0..4).map(|_| Tensor::zeros(&[h])).collect();
        let mut grad_in3 = Tensor::zeros(&[batch, t_steps, f]);

        let mut d_hidden = grad_out.clone();
        let mut d_cell = Tensor::zeros(&[batch, h]);
        for t in (0..t_steps).rev() {
            let gates = &cache.gates[t];
            let tanh_c = &cache.cell_tanh[t];
            let prev_c = &cache.prev_cell[t];
            let prev_h = &cache.prev_hidden[t];

            // h_t = o ⊙ tanh(c_t)
            let mut d_o = Tensor::zeros(&[batch, h]);
            for i in 0..batch * h {
                d_o.data_mut()[i] = d_hidden.data()[i] * tanh_c.data()[i];
                d_cell.data_mut()[i] +=
                    d_hidden.data()[i] * gates[3].data()[i] * (1.0 - tanh_c.data()[i] * tanh_c.data()[i]);
            }
            // c_t = f ⊙ c_{t-1} + i ⊙ g
            let mut d_i = Tensor::zeros(&[batch, h]);
            let mut d_f = Tensor::zeros(&[batch, h]);
            let mut d_g = Tensor::zeros(&[batch, h]);
            let mut d_cell_prev = Tensor::zeros(&[batch, h]);
            for i in 0..batch * h {
                d_i.data_mut()[i] = d_cell.data()[i] * gates[2].data()[i];
                d_g.data_mut()[i] = d_cell.data()[i] * gates[0].data()[i];
                d_f.data_mut()[i] = d_cell.data()[i] * prev_c.data()[i];
                d_cell_prev.data_mut()[i] = d_cell.data()[i] * gates[1].data()[i];
            }
            // through the gate nonlinearities to pre-activations
            let mut dz: [Tensor; 4] = [
                d_i,
                d_f,
                d_g,
                d_o,
            ];
            for (g, dzg) in dz.iter_mut().enumerate() {
                let act = if g == 2 { Activation::Tanh } else { Activation::Sigmoid };
                for i in 0..batch * h {
                    let y = gates[g].data()[i];
                    dzg.data_mut()[i] *= act.derivative(0.0, y);
                }
            }
            // x_t for this step
            let mut x_t = Tensor::zeros(&[batch, f]);
            for b in 0..batch {
                let src = (b * t_steps + t) * f;
                x_t.data_mut()[b * f..(b + 1) * f]
                    .copy_from_slice(&cache.input3.data()[src..src + f]);
            }
            let mut d_hidden_prev = Tensor::zeros(&[batch, h]);
            let mut d_x = Tensor::zeros(&[batch, f]);
            for g in 0..4 {
                matmul_at_b(x_t.data(), dz[g].data(), batch, f, h, grad_wx[g].data_mut());
                matmul_at_b(prev_h.data(), dz[g].data(), batch, h, h, grad_wh[g].data_mut());
                for b in 0..batch {
                    for j in 0..h {
                        grad_b[g].data_mut()[j] += dz[g].data()[b * h + j];
                    }
                }
                matmul_a_bt(dz[g].data(), self.w_x[g].data(), batch, h, f, d_x.data_mut());
                matmul_a_bt(dz[g].data(), self.w_h[g].data(), batch, h, h, d_hidden_prev.data_mut());
            }
            for b in 0..batch {
                let dst = (b * t_steps + t) * f;
                for j in 0..f {
                    grad_in3.data_mut()[dst + j] += d_x.data()[b * f + j];
                }
            }
            d_hidden = d_hidden_prev;
            d_cell = d_cell_prev;
        }

        let grad_in = match cache.flat_width {
            None => grad_in3,
            Some(width) => {
                // crop the zero padding back off
                let mut flat = Tensor::zeros(&[batch, width]);
                for b in 0..batch {
                    flat.data_mut()[b * width..(b + 1) * width]
                        .copy_from_slice(&grad_in3.data()[b * t_steps * f..b * t_steps * f + width]);
                }
                flat
            }
        };
        let mut params = grad_wx;
        params.extend(grad_wh);
        params.extend(grad_b);
        (grad_in, params)
    }
}

/// The layer kinds a [`super::Network`] composes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    #[serde(rename = "maxpool1d")]
    MaxPool1d(MaxPool1d),
    Flatten,
    Dropout(Dropout),
    Activation { activation: Activation },
    Lstm(Lstm),
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::MaxPool1d(_) => "maxpool1d",
            Layer::Flatten => "flatten",
            Layer::Dropout(_) => "dropout",
            Layer::Activation { .. } => "activation",
            Layer::Lstm(_) => "lstm",
        }
    }

    /// Per-row output shape given a per-row input shape, or an error when the
    /// shapes do not compose.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NeuralError> {
        match self {
            Layer::Dense(d) => {
                if input != [d.input_size()] {
                    return Err(NeuralError::shape("dense", &[d.input_size()], input));
                }
                Ok(vec![d.output_size()])
            }
            Layer::Conv1d(c) => {
                let (len, cin) = match input {
                    [l, ch] => (*l, *ch),
                    [n] if n % c.in_channels() == 0 => (n / c.in_channels(), c.in_channels()),
                    _ => return Err(NeuralError::shape("conv1d", &[0, c.in_channels()], input)),
                };
                if cin != c.in_channels() {
                    return Err(NeuralError::shape("conv1d", &[len, c.in_channels()], input));
                }
                Ok(vec![c.output_len(len)?, c.filters()])
            }
            Layer::MaxPool1d(p) => match input {
                [l, ch] => Ok(vec![p.output_len(*l)?, *ch]),
                _ => Err(NeuralError::shape("maxpool1d", &[0, 0], input)),
            },
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Dropout(_) | Layer::Activation { .. } => Ok(input.to_vec()),
            Layer::Lstm(l) => {
                match input {
                    [t, f] if *t == l.timesteps && *f == l.step_width => {}
                    [n] if *n <= l.timesteps * l.step_width => {}
                    _ => {
                        return Err(NeuralError::shape(
                            "lstm",
                            &[l.timesteps, l.step_width],
                            input,
                        ))
                    }
                }
                Ok(vec![l.hidden])
            }
        }
    }

    /// Named parameter tensors in declaration order. Weight-like parameters
    /// are flagged `penalized` and participate in L1/L2 regularization;
    /// biases do not.
    pub fn params(&self) -> Vec<ParamSlot<'_>> {
        match self {
            Layer::Dense(d) => vec![
                ParamSlot::new("weights", &d.weights, true),
                ParamSlot::new("bias", &d.bias, false),
            ],
            Layer::Conv1d(c) => vec![
                ParamSlot::new("kernels", &c.kernels, true),
                ParamSlot::new("bias", &c.bias, false),
            ],
            Layer::Lstm(l) => {
                let mut v = Vec::with_capacity(12);
                for (gate, wt) in LSTM_GATE_NAMES.iter().zip(&l.w_x) {
                    v.push(ParamSlot::owned_name(format!("w_x.{gate}"), wt, true));
                }
                for (gate, wt) in LSTM_GATE_NAMES.iter().zip(&l.w_h) {
                    v.push(ParamSlot::owned_name(format!("w_h.{gate}"), wt, true));
                }
                for (gate, b) in LSTM_GATE_NAMES.iter().zip(&l.b) {
                    v.push(ParamSlot::owned_name(format!("b.{gate}"), b, false));
                }
                v
            }
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(d) => vec![&mut d.weights, &mut d.bias],
            Layer::Conv1d(c) => vec![&mut c.kernels, &mut c.bias],
            Layer::Lstm(l) => {
                let mut v: Vec<&mut Tensor> = Vec::with_capacity(12);
                v.extend(l.w_x.iter_mut());
                v.extend(l.w_h.iter_mut());
                v.extend(l.b.iter_mut());
                v
            }
            _ => Vec::new(),
        }
    }
}

/// A named view of one parameter tensor.
pub struct ParamSlot<'a> {
    pub name: String,
    pub tensor: &'a Tensor,
    pub penalized: bool,
}

impl<'a> ParamSlot<'a> {
    fn new(name: &str, tensor: &'a Tensor, penalized: bool) -> Self {
        ParamSlot {
            name: name.to_string(),
            tensor,
            penalized,
        }
    }

    fn owned_name(name: String, tensor: &'a Tensor, penalized: bool) -> Self {
        ParamSlot {
            name,
            tensor,
            penalized,
        }
    }
}

/// Cache entry produced by one layer's forward pass.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Dense { input: Tensor },
    Conv1d { input3: Tensor },
    MaxPool1d { input_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_shape: Vec<usize> },
    Dropout { mask: Option<Tensor> },
    Activation { input: Tensor, output: Tensor },
    Lstm(Box<LstmCache>),
}
