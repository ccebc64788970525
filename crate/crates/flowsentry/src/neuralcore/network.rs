//! Layer composition, whole-network forward/backward, parameter access,
//! and the on-disk model format.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::layer::{Layer, LayerCache, ParamSlot};
use super::tensor::Tensor;
use super::NeuralError;
use crate::seeds;

/// Final probabilities are clipped into `[PROB_EPS, 1 - PROB_EPS]` so the
/// output is always strictly inside (0,1) and thresholding is total.
pub const PROB_EPS: f64 = 1e-7;

/// Scale of L1/L2 penalties added to the data loss during training.
/// The L2 gradient convention is `l2 * 2 * w`; the L1 subgradient at exactly
/// zero is zero. Penalties apply to weight matrices, not biases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regularization {
    pub l1: f64,
    pub l2: f64,
}

impl Regularization {
    pub fn none() -> Self {
        Regularization::default()
    }

    pub fn is_zero(&self) -> bool {
        self.l1 == 0.0 && self.l2 == 0.0
    }
}

/// An ordered stack of layers mapping `[batch] + input_shape` feature tensors
/// to one attack probability per row. The last layer must be a sigmoid
/// activation over a single unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Network {
    pub input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// Everything `backward` needs from the matching `forward` call.
#[derive(Debug)]
pub struct ForwardCache {
    layer_caches: Vec<LayerCache>,
    /// true where the final probability was clipped (gradient is zero there)
    clipped: Vec<bool>,
    batch: usize,
}

/// Named parameter gradients in network declaration order.
#[derive(Debug, Clone)]
pub struct Gradients {
    entries: Vec<(String, Tensor, bool)>,
}

impl Gradients {
    /// Build a gradient list directly; used when driving the optimizer
    /// outside a network (tests, toy problems).
    pub fn from_tensors(entries: Vec<(String, Tensor)>) -> Self {
        Gradients {
            entries: entries.into_iter().map(|(n, t)| (n, t, false)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.entries.iter().map(|(_, t, _)| t)
    }

    pub fn named(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t, _)| (n.as_str(), t))
    }

    pub fn get(&self, index: usize) -> &Tensor {
        &self.entries[index].1
    }

    pub fn name(&self, index: usize) -> &str {
        &self.entries[index].0
    }
}

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self, NeuralError> {
        let net = Network { input_shape, layers };
        net.validate()?;
        Ok(net)
    }

    /// Shape-checks the stack and the sigmoid-scalar output contract.
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.layers.is_empty() {
            return Err(NeuralError::InvalidNetwork("network has no layers".into()));
        }
        let mut shape = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.output_shape(&shape).map_err(|e| {
                NeuralError::InvalidNetwork(format!("layer {i} ({}): {e}", layer.kind_name()))
            })?;
        }
        if shape != [1] {
            return Err(NeuralError::InvalidNetwork(format!(
                "network must end in a single unit, ends in {shape:?}"
            )));
        }
        match self.layers.last() {
            Some(Layer::Activation { activation: Activation::Sigmoid }) => Ok(()),
            _ => Err(NeuralError::InvalidNetwork(
                "final layer must be a sigmoid activation".into(),
            )),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Set the rate of every dropout layer (the builders insert slots with
    /// rate 0; training configures them).
    pub fn set_dropout_rate(&mut self, rate: f64) {
        assert!((0.0..1.0).contains(&rate), "drop rate must be in [0,1)");
        for layer in &mut self.layers {
            if let Layer::Dropout(d) = layer {
                d.rate = rate;
            }
        }
    }

    /// Named parameter views in declaration order.
    pub fn param_slots(&self) -> Vec<ParamSlot<'_>> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            for mut slot in layer.params() {
                slot.name = format!("layer{i}.{}.{}", layer.kind_name(), slot.name);
                out.push(slot);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_slots().iter().map(|s| s.tensor.len()).sum()
    }

    /// Initialize all parameters from a seeded stream: uniform
    /// ±sqrt(6/(fan_in+fan_out)) for dense and conv weights, the same scaled
    /// uniform per LSTM gate matrix, zero biases except the LSTM forget-gate
    /// bias which starts at 1.0.
    pub fn initialize(&mut self, seed: u64) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let mut rng = seeds::rng(seeds::derive(seed, "init", i as u64));
            match layer {
                Layer::Dense(d) => {
                    let (fan_in, fan_out) = (d.input_size(), d.output_size());
                    fill_glorot(&mut d.weights, fan_in, fan_out, &mut rng);
                    for v in d.bias.data_mut() {
                        *v = 0.0;
                    }
                }
                Layer::Conv1d(c) => {
                    let fan_in = c.kernel_size() * c.in_channels();
                    let fan_out = c.kernel_size() * c.filters();
                    fill_glorot(&mut c.kernels, fan_in, fan_out, &mut rng);
                    for v in c.bias.data_mut() {
                        *v = 0.0;
                    }
                }
                Layer::Lstm(l) => {
                    let (f, h) = (l.step_width, l.hidden);
                    for wt in l.w_x.iter_mut() {
                        fill_glorot(wt, f, h, &mut rng);
                    }
                    for wt in l.w_h.iter_mut() {
                        fill_glorot(wt, h, h, &mut rng);
                    }
                    for (g, b) in l.b.iter_mut().enumerate() {
                        let init = if g == 1 { 1.0 } else { 0.0 }; // forget gate
                        for v in b.data_mut() {
                            *v = init;
                        }
                    }
                }
                _ => {}
            }
        }
    }

    /// Run the stack over a batch. Dropout masks are drawn from a stream
    /// derived from `seed`, so identical `(weights, batch, seed)` give
    /// identical outputs. With `training = false` dropout is the identity.
    pub fn forward(
        &self,
        batch: &Tensor,
        training: bool,
        seed: u64,
    ) -> Result<(Tensor, ForwardCache), NeuralError> {
        let expected: Vec<usize> =
            std::iter::once(0).chain(self.input_shape.iter().copied()).collect();
        if batch.rank() != expected.len() || batch.shape()[1..] != expected[1..] {
            return Err(NeuralError::shape("network forward", &expected, batch.shape()));
        }
        let rows = batch.shape()[0];
        let mut dropout_rng = seeds::rng(seeds::derive(seed, "dropout", 0));
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::Dense(d) => {
                    let (out, input) = d.forward(&current)?;
                    (out, LayerCache::Dense { input })
                }
                Layer::Conv1d(c) => {
                    let (out, input3) = c.forward(&current)?;
                    (out, LayerCache::Conv1d { input3 })
                }
                Layer::MaxPool1d(p) => {
                    let shape = current.shape().to_vec();
                    let (out, argmax) = p.forward(&current)?;
                    (out, LayerCache::MaxPool1d { input_shape: shape, argmax })
                }
                Layer::Flatten => {
                    let shape = current.shape().to_vec();
                    let flat: usize = shape[1..].iter().product();
                    (
                        current.clone().reshape(&[rows, flat]),
                        LayerCache::Flatten { input_shape: shape },
                    )
                }
                Layer::Dropout(d) => {
                    let (out, mask) = d.forward(&current, training, &mut dropout_rng);
                    (out, LayerCache::Dropout { mask })
                }
                Layer::Activation { activation } => {
                    let out = activation.apply(&current);
                    (
                        out.clone(),
                        LayerCache::Activation { input: current.clone(), output: out },
                    )
                }
                Layer::Lstm(l) => {
                    let (out, cache) = l.forward(&current)?;
                    (out, LayerCache::Lstm(Box::new(cache)))
                }
            };
            caches.push(cache);
            current = next;
        }
        // clip the final sigmoid output into the open interval
        let mut clipped = vec![false; current.len()];
        for (v, c) in current.data_mut().iter_mut().zip(clipped.iter_mut()) {
            if *v < PROB_EPS {
                *v = PROB_EPS;
                *c = true;
            } else if *v > 1.0 - PROB_EPS {
                *v = 1.0 - PROB_EPS;
                *c = true;
            }
        }
        Ok((current, ForwardCache { layer_caches: caches, clipped, batch: rows }))
    }

    /// Backpropagate `dL/dprobability` through the stack. Regularization
    /// gradients are added to penalized parameters when configured.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        loss_grad: &Tensor,
        reg: &Regularization,
    ) -> Result<Gradients, NeuralError> {
        if cache.layer_caches.len() != self.layers.len() {
            return Err(NeuralError::StaleCache(format!(
                "cache holds {} layers, network has {}",
                cache.layer_caches.len(),
                self.layers.len()
            )));
        }
        if loss_grad.shape() != [cache.batch, 1] {
            return Err(NeuralError::shape(
                "network backward",
                &[cache.batch, 1],
                loss_grad.shape(),
            ));
        }
        let mut grad = loss_grad.clone();
        for (g, was_clipped) in grad.data_mut().iter_mut().zip(cache.clipped.iter()) {
            if *was_clipped {
                *g = 0.0;
            }
        }
        // collected in reverse layer order, flipped at the end
        let mut rev_entries: Vec<(String, Tensor, bool)> = Vec::new();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let layer_cache = &cache.layer_caches[i];
            grad = match (layer, layer_cache) {
                (Layer::Dense(d), LayerCache::Dense { input }) => {
                    let (gin, gw, gb) = d.backward(input, &grad);
                    rev_entries.push((format!("layer{i}.dense.bias"), gb, false));
                    rev_entries.push((format!("layer{i}.dense.weights"), gw, true));
                    gin
                }
                (Layer::Conv1d(c), LayerCache::Conv1d { input3 }) => {
                    let (gin, gk, gb) = c.backward(input3, &grad);
                    rev_entries.push((format!("layer{i}.conv1d.bias"), gb, false));
                    rev_entries.push((format!("layer{i}.conv1d.kernels"), gk, true));
                    gin
                }
                (Layer::MaxPool1d(p), LayerCache::MaxPool1d { input_shape, argmax }) => {
                    p.backward(input_shape, argmax, &grad)
                }
                (Layer::Flatten, LayerCache::Flatten { input_shape }) => {
                    grad.clone().reshape(input_shape)
                }
                (Layer::Dropout(d), LayerCache::Dropout { mask }) => {
                    d.backward(mask.as_ref(), &grad)
                }
                (Layer::Activation { activation }, LayerCache::Activation { input, output }) => {
                    let data = grad
                        .data()
                        .iter()
                        .zip(input.data().iter().zip(output.data()))
                        .map(|(&g, (&x, &y))| g * activation.derivative(x, y))
                        .collect();
                    Tensor::from_vec(grad.shape(), data)
                }
                (Layer::Lstm(l), LayerCache::Lstm(lstm_cache)) => {
                    let (gin, params) = l.backward(lstm_cache, &grad);
                    let slots = layer.params();
                    for (slot, gt) in slots.iter().zip(params).rev() {
                        rev_entries.push((
                            format!("layer{i}.lstm.{}", slot.name),
                            gt,
                            slot.penalized,
                        ));
                    }
                    gin
                }
                _ => {
                    return Err(NeuralError::StaleCache(format!(
                        "cache entry {i} does not match layer kind {}",
                        layer.kind_name()
                    )))
                }
            };
        }
        rev_entries.reverse();

        if !reg.is_zero() {
            let slots = self.param_slots();
            debug_assert_eq!(slots.len(), rev_entries.len());
            for (slot, entry) in slots.iter().zip(rev_entries.iter_mut()) {
                if !slot.penalized {
                    continue;
                }
                for (g, &w) in entry.1.data_mut().iter_mut().zip(slot.tensor.data()) {
                    *g += reg.l2 * 2.0 * w + reg.l1 * sign0(w);
                }
            }
        }
        Ok(Gradients { entries: rev_entries })
    }

    /// The L1/L2 penalty currently contributed by the penalized parameters.
    pub fn penalty_loss(&self, reg: &Regularization) -> f64 {
        if reg.is_zero() {
            return 0.0;
        }
        let mut l1_sum = 0.0;
        let mut l2_sum = 0.0;
        for slot in self.param_slots() {
            if !slot.penalized {
                continue;
            }
            for &w in slot.tensor.data() {
                l1_sum += w.abs();
                l2_sum += w * w;
            }
        }
        reg.l1 * l1_sum + reg.l2 * l2_sum
    }
}

fn sign0(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn fill_glorot(t: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut rand_chacha::ChaCha8Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in t.data_mut() {
        *v = (rng.gen::<f64>() * 2.0 - 1.0) * limit;
    }
}

// ---------------------------------------------------------------------------
// on-disk format: JSON manifest + little-endian f64 parameter blob
// ---------------------------------------------------------------------------

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NetworkManifest {
    version: u32,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    parameter_count: usize,
}

/// Serialize the architecture to a JSON value (parameter values excluded)
/// and the parameters to a little-endian byte blob in declaration order.
pub fn network_to_parts(net: &Network) -> (serde_json::Value, Vec<u8>) {
    let mut blob = Vec::with_capacity(net.param_count() * 8);
    for slot in net.param_slots() {
        for v in slot.tensor.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut skeleton = net.clone();
    for t in skeleton.params_mut() {
        for v in t.data_mut() {
            *v = 0.0;
        }
    }
    let manifest = NetworkManifest {
        version: NETWORK_FORMAT_VERSION,
        input_shape: skeleton.input_shape.clone(),
        layers: skeleton.layers,
        parameter_count: net.param_count(),
    };
    (serde_json::to_value(&manifest).expect("manifest serializes"), blob)
}

pub fn network_from_parts(manifest: &serde_json::Value, blob: &[u8]) -> Result<Network, NeuralError> {
    let manifest: NetworkManifest = serde_json::from_value(manifest.clone())
        .map_err(|e| NeuralError::Format(format!("bad network manifest: {e}")))?;
    if manifest.version != NETWORK_FORMAT_VERSION {
        return Err(NeuralError::Format(format!(
            "unsupported network format version {}",
            manifest.version
        )));
    }
    let mut net = Network { input_shape: manifest.input_shape, layers: manifest.layers };
    let expected = net.param_count();
    if manifest.parameter_count != expected || blob.len() != expected * 8 {
        return Err(NeuralError::Format(format!(
            "parameter blob holds {} bytes, expected {}",
            blob.len(),
            expected * 8
        )));
    }
    let mut offset = 0;
    for t in net.params_mut() {
        for v in t.data_mut() {
            let mut bytes = [0u8; 8];
            bytes.copy_from_slice(&blob[offset..offset + 8]);
            *v = f64::from_le_bytes(bytes);
            offset += 8;
        }
    }
    net.validate()?;
    Ok(net)
}

pub fn save_network(net: &Network, manifest_path: &Path, blob_path: &Path) -> Result<(), NeuralError> {
    let (manifest, blob) = network_to_parts(net);
    let mut f = std::fs::File::create(manifest_path)?;
    f.write_all(serde_json::to_string_pretty(&manifest).expect("json").as_bytes())?;
    let mut f = std::fs::File::create(blob_path)?;
    f.write_all(&blob)?;
    Ok(())
}

pub fn load_network(manifest_path: &Path, blob_path: &Path) -> Result<Network, NeuralError> {
    let manifest: serde_json::Value =
        serde_json::from_reader(std::fs::File::open(manifest_path)?)
            .map_err(|e| NeuralError::Format(format!("bad network manifest: {e}")))?;
    let mut blob = Vec::new();
    std::fs::File::open(blob_path)?.read_to_end(&mut blob)?;
    network_from_parts(&manifest, &blob)
}
