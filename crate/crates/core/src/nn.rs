//! Minimal dense feed-forward network with inverted dropout, manual
//! backpropagation and an Adam optimizer.
//!
//! Shared by the active learner (a small classifier scored with MC dropout)
//! and the dueling Q-network of the sampler. Weights are stored row-major with
//! shape `(out_dim, in_dim)` per layer.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{RadsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Whether hidden-unit dropout masks are sampled during a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Dropout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    dropout_rate: f64,
    output_activation: Activation,
}

/// Activations recorded by [`Mlp::forward`] for use in [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input fed to each layer (post-activation, post-mask of the previous one).
    layer_inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Vec<f64>>,
    /// Dropout scale factors of each hidden layer (`None` when no mask was drawn).
    masks: Vec<Option<Vec<f64>>>,
}

/// Parameter gradients, shaped like the network's weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Flat views in the same order as [`Mlp::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Mlp {
    /// Builds a network with He-uniform weights and zero biases.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        dropout_rate: f64,
        output_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_dims, dropout_rate, output_activation)?;
        for (l, w) in net.weights.iter_mut().enumerate() {
            let limit = (6.0 / layer_dims[l] as f64).sqrt();
            for x in w.iter_mut() {
                *x = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn zeros(layer_dims: &[usize], dropout_rate: f64, output_activation: Activation) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(RadsError::param("an MLP needs at least input and output dims"));
        }
        if layer_dims.contains(&0) {
            return Err(RadsError::param("layer dimensions must be positive"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(RadsError::param(format!(
                "dropout rate must lie in [0, 1), got {dropout_rate}"
            )));
        }
        let weights = layer_dims.windows(2).map(|d| vec![0.0; d[0] * d[1]]).collect();
        let biases = layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Mlp {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            dropout_rate,
            output_activation,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.weights[layer]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.biases[layer]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.biases[layer]
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Parameter views, alternating weights and biases layer by layer.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.len(), b.len()])
            .collect()
    }

    /// Runs the network and returns raw outputs (logits for a classifier).
    ///
    /// In [`Mode::Dropout`] every hidden unit is zeroed with probability
    /// `dropout_rate` and survivors are scaled by `1 / (1 - dropout_rate)`.
    pub fn forward<R: Rng + ?Sized>(&self, input: &[f64], mode: Mode, rng: &mut R) -> Result<(Vec<f64>, ForwardCache)> {
        match mode {
            Mode::Dropout if self.dropout_rate > 0.0 => self.run(input, Some(&mut DynRng(rng))),
            _ => self.run(input, None),
        }
    }

    fn run(&self, input: &[f64], mut rng: Option<&mut dyn RngCore>) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(RadsError::InputShape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let n_layers = self.num_layers();
        let mut cache = ForwardCache {
            layer_inputs: Vec::with_capacity(n_layers),
            pre: Vec::with_capacity(n_layers),
            masks: Vec::with_capacity(n_layers.saturating_sub(1)),
        };
        let mut current = input.to_vec();
        for l in 0..n_layers {
            let (in_dim, out_dim) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let w = &self.weights[l];
            let z: Vec<f64> = (0..out_dim)
                .map(|o| {
                    let row = &w[o * in_dim..(o + 1) * in_dim];
                    self.biases[l][o] + row.iter().zip(&current).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let last = l + 1 == n_layers;
            let act = if last { self.output_activation } else { Activation::Relu };
            let mut a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            if !last {
                let mask = if let Some(rng) = rng.as_deref_mut() {
                    let keep_scale = 1.0 / (1.0 - self.dropout_rate);
                    let m: Vec<f64> = (0..out_dim)
                        .map(|_| {
                            if rng.random::<f64>() < self.dropout_rate {
                                0.0
                            } else {
                                keep_scale
                            }
                        })
                        .collect();
                    a.iter_mut().zip(&m).for_each(|(x, s)| *x *= s);
                    Some(m)
                } else {
                    None
                };
                cache.masks.push(mask);
            }
            cache.layer_inputs.push(current);
            cache.pre.push(z);
            current = a;
        }
        Ok((current, cache))
    }

    /// Deterministic forward pass that keeps the cache for backpropagation.
    pub fn forward_eval(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        self.run(input, None)
    }

    /// Deterministic forward pass without a cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.run(input, None).map(|(out, _)| out)
    }

    /// Backpropagates `d_output` (gradient of the loss w.r.t. the outputs)
    /// through the cached pass. Returns parameter gradients and the gradient
    /// w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros_like(self);
        let n_layers = self.num_layers();
        let mut d_a = d_output.to_vec();
        for l in (0..n_layers).rev() {
            let in_dim = self.layer_dims[l];
            let act = if l + 1 == n_layers {
                self.output_activation
            } else {
                Activation::Relu
            };
            let dz: Vec<f64> = d_a
                .iter()
                .zip(&cache.pre[l])
                .map(|(g, &z)| g * act.derivative(z))
                .collect();
            let input = &cache.layer_inputs[l];
            let w = &self.weights[l];
            let gw = &mut grads.weights[l];
            let mut d_in = vec![0.0; in_dim];
            for (o, &g) in dz.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grads.biases[l][o] = g;
                let row = o * in_dim;
                for i in 0..in_dim {
                    gw[row + i] = g * input[i];
                    d_in[i] += w[row + i] * g;
                }
            }
            if l > 0 {
                if let Some(mask) = &cache.masks[l - 1] {
                    d_in.iter_mut().zip(mask).for_each(|(x, s)| *x *= s);
                }
            }
            d_a = d_in;
        }
        (grads, d_a)
    }
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Softmax with max-subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Adam optimizer state over a fixed list of parameter slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, param_sizes: &[usize]) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(RadsError::param(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(OptimizerState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        })
    }

    pub fn for_mlp(net: &Mlp, learning_rate: f64) -> Result<Self> {
        Self::new(learning_rate, &net.param_sizes())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update.
    pub fn apply(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(RadsError::param("optimizer state does not match parameter layout"));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(RadsError::param("optimizer state does not match parameter shapes"));
            }
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

fn check_batch(net: &Mlp, inputs: &[Vec<f64>], labels: &[usize], class_weights: Option<&[f64]>) -> Result<()> {
    if inputs.is_empty() {
        return Err(RadsError::param("batch must be non-empty"));
    }
    if inputs.len() != labels.len() {
        return Err(RadsError::param("inputs and labels differ in length"));
    }
    let classes = net.output_dim();
    if let Some(&label) = labels.iter().find(|&&y| y >= classes) {
        return Err(RadsError::Label { label, classes });
    }
    if let Some(w) = class_weights {
        if w.len() != classes || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(RadsError::param("class weights must be one positive value per class"));
        }
    }
    Ok(())
}

/// Mean (optionally class-weighted) cross-entropy over a batch and its
/// gradient. Weighted loss is normalized by the total weight of the batch.
pub fn loss_and_gradients<R: Rng + ?Sized>(
    net: &Mlp,
    inputs: &[Vec<f64>],
    labels: &[usize],
    class_weights: Option<&[f64]>,
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    check_batch(net, inputs, labels, class_weights)?;
    let weight_of = |y: usize| class_weights.map_or(1.0, |w| w[y]);
    let total_weight: f64 = labels.iter().map(|&y| weight_of(y)).sum();
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        let (logits, cache) = net.forward(x, mode, rng)?;
        let probs = softmax(&logits);
        let w = weight_of(y) / total_weight;
        loss += -w * probs[y].max(1e-300).ln();
        let d_logits: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(c, &p)| w * (p - if c == y { 1.0 } else { 0.0 }))
            .collect();
        let (g, _) = net.backward(&cache, &d_logits);
        grads.add_assign(&g);
    }
    if !loss.is_finite() {
        return Err(RadsError::Numeric(format!("non-finite loss {loss}")));
    }
    Ok((loss, grads))
}

/// One Adam step on a batch with dropout active. Returns the loss measured
/// before the update.
pub fn train_step<R: Rng + ?Sized>(
    net: &mut Mlp,
    opt: &mut OptimizerState,
    inputs: &[Vec<f64>],
    labels: &[usize],
    class_weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<f64> {
    let (loss, grads) = loss_and_gradients(net, inputs, labels, class_weights, Mode::Dropout, rng)?;
    opt.apply(net.param_slices_mut(), grads.slices())?;
    Ok(loss)
}

/// `k` stochastic forward passes with dropout active; each row is a softmax.
pub fn mc_passes<R: Rng + ?Sized>(net: &Mlp, input: &[f64], k: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(RadsError::param("number of MC passes must be at least 1"));
    }
    (0..k)
        .map(|_| {
            net.forward(input, Mode::Dropout, rng)
                .map(|(logits, _)| softmax(&logits))
        })
        .collect()
}
