//! Dense feed-forward networks with tanh hidden layers and linear output.

use super::LearnError;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters of one dense layer; weights are row-major `[out][in]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

/// Multilayer perceptron: tanh on hidden layers, identity on the output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Gradients with the same shapes as [`Mlp`] parameters.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub layers: Vec<Layer>,
}

impl MlpGradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                    rows: l.rows,
                    cols: l.cols,
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            for x in &mut l.weights {
                *x *= c;
            }
            for x in &mut l.biases {
                *x *= c;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        for l in &self.layers {
            for x in &l.weights {
                acc += x * x;
            }
            for x in &l.biases {
                acc += x * x;
            }
        }
        acc.sqrt()
    }

    /// Scales gradients down so the global norm does not exceed `clip`.
    pub fn clip_global_norm(&mut self, clip: f64) {
        let norm = self.global_norm();
        if norm > clip {
            self.scale(clip / norm);
        }
    }
}

/// Post-activation values of every layer, needed by [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    /// activations[0] is the input; activations[L] is the output.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds a forward pass")
    }
}

/// Reusable delta buffers for [`Mlp::backward_into`].
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

/// Four-accumulator dot product; the split chains let the autovectorizer
/// keep the FMA units busy where a strict left-to-right reduction cannot.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

impl Mlp {
    /// Random initialization: uniform in `+-1/sqrt(fan_in)` per layer.
    pub fn new(layer_sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        let mut layers = Vec::with_capacity(layer_sizes.len() - 1);
        for w in layer_sizes.windows(2) {
            let (cols, rows) = (w[0], w[1]);
            let bound = 1.0 / (cols as f64).sqrt();
            let weights = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
            let biases = vec![0.0; rows];
            layers.push(Layer { weights, biases, rows, cols });
        }
        Self { layer_sizes: layer_sizes.to_vec(), layers }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub(crate) fn from_layers(layer_sizes: Vec<usize>, layers: Vec<Layer>) -> Self {
        Self { layer_sizes, layers }
    }

    fn check_input(&self, input: &[f64]) -> Result<(), LearnError> {
        if input.len() != self.input_dim() {
            return Err(LearnError::ShapeMismatch(format!(
                "input length {} != first layer size {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Forward pass returning only the output.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, LearnError> {
        Ok(self.forward_trace(input)?.activations.pop().unwrap())
    }

    /// Forward pass keeping every activation for the backward pass.
    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace, LearnError> {
        let mut trace = ForwardTrace { activations: Vec::new() };
        self.forward_trace_into(input, &mut trace)?;
        Ok(trace)
    }

    /// Buffer-reusing forward pass for hot loops.
    pub fn forward_trace_into(
        &self,
        input: &[f64],
        trace: &mut ForwardTrace,
    ) -> Result<(), LearnError> {
        self.check_input(input)?;
        trace.activations.resize_with(self.layers.len() + 1, Vec::new);
        trace.activations[0].clear();
        trace.activations[0].extend_from_slice(input);
        for (li, layer) in self.layers.iter().enumerate() {
            let (before, after) = trace.activations.split_at_mut(li + 1);
            let x = &before[li];
            let y = &mut after[0];
            y.clear();
            y.extend_from_slice(&layer.biases);
            for (r, out) in y.iter_mut().enumerate() {
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                *out += dot(row, x);
            }
            if li + 1 < self.layers.len() {
                for v in y.iter_mut() {
                    *v = v.tanh();
                }
            }
        }
        Ok(())
    }

    /// Exact reverse-mode gradients of the forward map.
    ///
    /// `output_grad` is dLoss/dOutput; returns parameter gradients plus the
    /// gradient with respect to the input vector.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
    ) -> Result<(MlpGradients, Vec<f64>), LearnError> {
        let mut grads = MlpGradients::zeros_like(self);
        let mut input_grad = Vec::new();
        let mut scratch = BackwardScratch::default();
        self.backward_into(trace, output_grad, Some(&mut grads), Some(&mut input_grad), &mut scratch)?;
        Ok((grads, input_grad))
    }

    /// Buffer-reusing backward pass that accumulates into `grads` (so a
    /// batch can share one gradient container) and optionally reports the
    /// input gradient. Either destination may be omitted.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: Option<&mut MlpGradients>,
        input_grad: Option<&mut Vec<f64>>,
        scratch: &mut BackwardScratch,
    ) -> Result<(), LearnError> {
        if output_grad.len() != self.output_dim() {
            return Err(LearnError::ShapeMismatch(format!(
                "output_grad length {} != output size {}",
                output_grad.len(),
                self.output_dim()
            )));
        }
        let mut grads = grads;
        let delta = &mut scratch.delta;
        let next = &mut scratch.next;
        delta.clear();
        delta.extend_from_slice(output_grad);
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            // hidden layers apply tanh after the affine map; its derivative
            // uses the post-activation value a: d tanh = 1 - a^2
            if li + 1 < self.layers.len() {
                let a = &trace.activations[li + 1];
                for (d, ai) in delta.iter_mut().zip(a.iter()) {
                    *d *= 1.0 - ai * ai;
                }
            }
            let x = &trace.activations[li];
            if let Some(g) = grads.as_deref_mut() {
                let g = &mut g.layers[li];
                for r in 0..layer.rows {
                    let dr = delta[r];
                    g.biases[r] += dr;
                    let grow = &mut g.weights[r * layer.cols..(r + 1) * layer.cols];
                    for (gw, xi) in grow.iter_mut().zip(x.iter()) {
                        *gw += dr * xi;
                    }
                }
            }
            if li == 0 && input_grad.is_none() {
                return Ok(());
            }
            next.clear();
            next.resize(layer.cols, 0.0);
            for r in 0..layer.rows {
                let dr = delta[r];
                let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                for (ig, w) in next.iter_mut().zip(row.iter()) {
                    *ig += dr * w;
                }
            }
            std::mem::swap(delta, next);
        }
        if let Some(out) = input_grad {
            out.clear();
            out.extend_from_slice(delta);
        }
        Ok(())
    }

    pub fn all_params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }
}
