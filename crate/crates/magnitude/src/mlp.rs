//! Fully-connected classifier: ReLU hidden layers, softmax cross-entropy,
//! hand-written backprop. Gradients accumulate in fixed sample order so
//! training is bit-reproducible.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Weights `w[l]` have shape `(out, in)` row-major; biases `b[l]` have
/// length `out`. Flattening emits all weight matrices in layer order,
/// then all bias vectors in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Per-parameter gradients, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Reusable per-layer activation buffers.
#[derive(Debug, Clone)]
pub struct Scratch {
    activations: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::InvalidInputs(format!(
            "need at least input and output layers, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.iter().any(|&s| s == 0) {
        return Err(Error::InvalidInputs("all layer sizes must be >= 1".into()));
    }
    Ok(())
}

impl Mlp {
    /// He-style initialization: `w ~ N(0, 2 / fan_in)`, biases zero.
    /// Stream per layer, so the draw for a given parameter does not depend
    /// on other layers' sizes.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let std = (2.0 / fan_in as f64).sqrt();
            let mut rng = StreamRng::new(seed, l as u64);
            weights.push((0..fan_in * fan_out).map(|_| std * rng.normal()).collect());
            biases.push(vec![0.0f64; fan_out]);
        }
        Ok(Self { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    pub fn layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            activations: self.layer_sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
            deltas: self.layer_sizes[1..].iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn gradients(&self) -> Gradients {
        Gradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// All weight matrices then all biases, layer order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for w in &self.weights {
            out.extend_from_slice(w);
        }
        for b in &self.biases {
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`Mlp::flatten`].
    pub fn unflatten(layer_sizes: &[usize], flat: &[f64]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut pos = 0usize;
        for l in 0..layer_sizes.len() - 1 {
            let len = layer_sizes[l] * layer_sizes[l + 1];
            if pos + len > flat.len() {
                return Err(Error::InvalidInputs("flat parameter vector too short".into()));
            }
            weights.push(flat[pos..pos + len].to_vec());
            pos += len;
        }
        for l in 0..layer_sizes.len() - 1 {
            let len = layer_sizes[l + 1];
            if pos + len > flat.len() {
                return Err(Error::InvalidInputs("flat parameter vector too short".into()));
            }
            biases.push(flat[pos..pos + len].to_vec());
            pos += len;
        }
        if pos != flat.len() {
            return Err(Error::InvalidInputs(format!(
                "flat parameter vector has {} entries, expected {pos}",
                flat.len()
            )));
        }
        Ok(Self { layer_sizes: layer_sizes.to_vec(), weights, biases })
    }

    /// Forward pass; activations land in `scratch`, the returned index is
    /// the arg-max logit.
    fn forward(&self, x: &[f64], scratch: &mut Scratch) -> usize {
        let layers = self.layers();
        for l in 0..layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (head, tail) = scratch.activations.split_at_mut(l);
            let input: &[f64] = if l == 0 { x } else { &head[l - 1] };
            let out = &mut tail[0];
            let w = &self.weights[l];
            for j in 0..fan_out {
                let row = &w[j * fan_in..(j + 1) * fan_in];
                let mut z = self.biases[l][j];
                for (wi, xi) in row.iter().zip(input) {
                    z += wi * xi;
                }
                // ReLU on hidden layers, identity on the output logits.
                out[j] = if l + 1 < layers { z.max(0.0) } else { z };
            }
        }
        let logits = scratch.activations.last().unwrap();
        let mut best = 0;
        for (j, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = j;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64], scratch: &mut Scratch) -> usize {
        self.forward(x, scratch)
    }

    /// Cross-entropy of the current logits in `scratch` against `label`,
    /// writing softmax-minus-onehot into the output delta buffer.
    fn loss_from_logits(scratch: &mut Scratch, label: usize) -> f64 {
        let logits = scratch.activations.last().unwrap();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &z in logits {
            sum += (z - max).exp();
        }
        let log_z = max + sum.ln();
        let loss = log_z - logits[label];
        let logits = scratch.activations.last().unwrap();
        let delta = scratch.deltas.last_mut().unwrap();
        for (j, (d, &z)) in delta.iter_mut().zip(logits).enumerate() {
            *d = (z - log_z).exp() - if j == label { 1.0 } else { 0.0 };
        }
        loss
    }

    /// Mean cross-entropy over the batch; gradients are accumulated into
    /// `grad` (overwritten) in batch order.
    pub fn batch_loss_and_grad(
        &self,
        data: &Dataset,
        batch: &[usize],
        scratch: &mut Scratch,
        grad: &mut Gradients,
    ) -> f64 {
        for g in grad.weights.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for g in grad.biases.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let layers = self.layers();
        let mut total = 0.0;
        for &idx in batch {
            let x = data.feature(idx);
            self.forward(x, scratch);
            total += Self::loss_from_logits(scratch, data.labels[idx]);
            // Backward: delta[l] -> grads of layer l, then delta[l-1].
            for l in (0..layers).rev() {
                let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                {
                    let input: &[f64] =
                        if l == 0 { x } else { &scratch.activations[l - 1] };
                    let delta = &scratch.deltas[l];
                    let gw = &mut grad.weights[l];
                    let gb = &mut grad.biases[l];
                    for j in 0..fan_out {
                        let dj = delta[j];
                        gb[j] += dj;
                        let row = &mut gw[j * fan_in..(j + 1) * fan_in];
                        for (gi, xi) in row.iter_mut().zip(input) {
                            *gi += dj * xi;
                        }
                    }
                }
                if l > 0 {
                    let w = &self.weights[l];
                    let (head, tail) = scratch.deltas.split_at_mut(l);
                    let delta_out = &tail[0];
                    let delta_in = &mut head[l - 1];
                    let act = &scratch.activations[l - 1];
                    for i in 0..fan_in {
                        let mut s = 0.0;
                        for (j, dj) in delta_out.iter().enumerate() {
                            s += w[j * fan_in + i] * dj;
                        }
                        // ReLU derivative at the stored activation.
                        delta_in[i] = if act[i] > 0.0 { s } else { 0.0 };
                    }
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for g in grad.weights.iter_mut() {
            g.iter_mut().for_each(|v| *v *= scale);
        }
        for g in grad.biases.iter_mut() {
            g.iter_mut().for_each(|v| *v *= scale);
        }
        total * scale
    }

    /// Mean cross-entropy over a batch without touching gradients.
    pub fn batch_loss(&self, data: &Dataset, batch: &[usize], scratch: &mut Scratch) -> f64 {
        let mut total = 0.0;
        for &idx in batch {
            self.forward(data.feature(idx), scratch);
            total += Self::loss_from_logits(scratch, data.labels[idx]);
        }
        total / batch.len() as f64
    }

    pub fn sgd_step(&mut self, grad: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            for (wi, gi) in w.iter_mut().zip(g) {
                *wi -= learning_rate * gi;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grad.biases) {
            for (bi, gi) in b.iter_mut().zip(g) {
                *bi -= learning_rate * gi;
            }
        }
    }

    /// Fraction of correctly classified samples.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let mut scratch = self.scratch();
        let mut correct = 0usize;
        for i in 0..data.n {
            if self.forward(data.feature(i), &mut scratch) == data.labels[i] {
                correct += 1;
            }
        }
        correct as f64 / data.n as f64
    }
}

impl Gradients {
    /// Same layout as [`Mlp::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in &self.weights {
            out.extend_from_slice(w);
        }
        for b in &self.biases {
            out.extend_from_slice(b);
        }
        out
    }
}
