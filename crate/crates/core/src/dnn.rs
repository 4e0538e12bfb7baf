//! Single-node fully connected network trained by SGD with batch size one.
//!
//! This is the reference every distributed strategy is compared against, and
//! its activation helpers are the per-block kernels the strategies call.
//!
//! Conventions: layer `l` maps `x_l` (length `in_dim`) to `s_l = W_l x_l` and
//! `x_{l+1} = f(s_l)`. The loss is `Σ (ŷ_i - y_i)²` and `δ_l = -∂loss/∂s_l`,
//! so the update `W_l += η δ_l x_lᵀ` descends.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, Matrix};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DnnError {
    #[error("{what}: expected length {expected}, got {got}")]
    Dim {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("network needs at least one layer")]
    NoLayers,
    #[error("layer dimensions must be at least 1")]
    ZeroDim,
    #[error("layer {0} input does not match previous layer output")]
    BrokenChain(usize),
    #[error("learning rate must be positive and finite")]
    BadLearningRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn f(self, u: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-u).exp()),
            Activation::Identity => u,
        }
    }

    /// Derivative expressed through the output: `g(f(u)) = f'(u)`.
    #[inline]
    pub fn g(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }

    pub fn apply(self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.f(v)).collect()
    }

    pub fn derivative(self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|&v| self.g(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Specs for a chain `dims[0] -> dims[1] -> ...` with one activation.
pub fn layer_chain(dims: &[usize], activation: Activation) -> Vec<LayerSpec> {
    dims.windows(2)
        .map(|w| LayerSpec {
            in_dim: w[0],
            out_dim: w[1],
            activation,
        })
        .collect()
}

pub fn validate_chain(specs: &[LayerSpec]) -> Result<(), DnnError> {
    if specs.is_empty() {
        return Err(DnnError::NoLayers);
    }
    for (l, s) in specs.iter().enumerate() {
        if s.in_dim == 0 || s.out_dim == 0 {
            return Err(DnnError::ZeroDim);
        }
        if l > 0 && specs[l - 1].out_dim != s.in_dim {
            return Err(DnnError::BrokenChain(l));
        }
    }
    Ok(())
}

/// Uniform weights in `±1/√fan_in`, drawn layer by layer in row-major order.
pub fn init_weights(specs: &[LayerSpec], seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    specs
        .iter()
        .map(|s| {
            let bound = 1.0 / (s.in_dim as f64).sqrt();
            Matrix::from_fn(s.out_dim, s.in_dim, |_, _| rng.random_range(-bound..bound))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnnState {
    specs: Vec<LayerSpec>,
    pub weights: Vec<Matrix>,
    pub learning_rate: f64,
    pub iteration: u64,
}

impl DnnState {
    pub fn new(specs: Vec<LayerSpec>, weights: Vec<Matrix>, learning_rate: f64) -> Result<Self, DnnError> {
        validate_chain(&specs)?;
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(DnnError::BadLearningRate);
        }
        if weights.len() != specs.len() {
            return Err(DnnError::Dim {
                what: "weight matrices",
                expected: specs.len(),
                got: weights.len(),
            });
        }
        for (s, w) in specs.iter().zip(&weights) {
            if w.shape() != (s.out_dim, s.in_dim) {
                return Err(DnnError::Dim {
                    what: "weight matrix size",
                    expected: s.out_dim * s.in_dim,
                    got: w.rows() * w.cols(),
                });
            }
        }
        Ok(Self {
            specs,
            weights,
            learning_rate,
            iteration: 0,
        })
    }

    pub fn seeded(specs: Vec<LayerSpec>, learning_rate: f64, seed: u64) -> Result<Self, DnnError> {
        validate_chain(&specs)?;
        let weights = init_weights(&specs, seed);
        Self::new(specs, weights, learning_rate)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn num_layers(&self) -> usize {
        self.specs.len()
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.specs[self.specs.len() - 1].out_dim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `inputs[l]` is the input `x_l` of layer `l`.
    pub inputs: Vec<Vec<f64>>,
    /// `pre[l]` is `s_l = W_l x_l`.
    pub pre: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

pub fn feedforward(state: &DnnState, x: &[f64]) -> Result<ForwardTrace, DnnError> {
    if x.len() != state.input_dim() {
        return Err(DnnError::Dim {
            what: "input",
            expected: state.input_dim(),
            got: x.len(),
        });
    }
    let mut inputs = Vec::with_capacity(state.num_layers());
    let mut pre = Vec::with_capacity(state.num_layers());
    let mut cur = x.to_vec();
    for (spec, w) in state.specs.iter().zip(&state.weights) {
        let s = w.matvec(&cur);
        let next = spec.activation.apply(&s);
        inputs.push(cur);
        pre.push(s);
        cur = next;
    }
    Ok(ForwardTrace {
        inputs,
        pre,
        output: cur,
    })
}

/// `δ_L = 2 (y - ŷ) ⊙ g(ŷ)`.
pub fn output_delta(activation: Activation, output: &[f64], label: &[f64]) -> Vec<f64> {
    output
        .iter()
        .zip(label)
        .map(|(&yh, &y)| 2.0 * (y - yh) * activation.g(yh))
        .collect()
}

pub fn squared_error(output: &[f64], label: &[f64]) -> f64 {
    output.iter().zip(label).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Per-layer `δ_l`, indexed like the weights.
pub fn backprop(state: &DnnState, trace: &ForwardTrace, label: &[f64]) -> Result<Vec<Vec<f64>>, DnnError> {
    if label.len() != state.output_dim() {
        return Err(DnnError::Dim {
            what: "label",
            expected: state.output_dim(),
            got: label.len(),
        });
    }
    let layers = state.num_layers();
    let mut deltas = vec![Vec::new(); layers];
    deltas[layers - 1] = output_delta(state.specs[layers - 1].activation, &trace.output, label);
    for l in (1..layers).rev() {
        let c = state.weights[l].vecmat(&deltas[l]);
        let act = state.specs[l - 1].activation;
        deltas[l - 1] = c
            .iter()
            .zip(&trace.inputs[l])
            .map(|(&ci, &xi)| ci * act.g(xi))
            .collect();
    }
    Ok(deltas)
}

pub fn update(state: &mut DnnState, trace: &ForwardTrace, deltas: &[Vec<f64>]) {
    let eta = state.learning_rate;
    for (l, w) in state.weights.iter_mut().enumerate() {
        w.rank1_update(eta, &deltas[l], &trace.inputs[l]);
    }
    state.iteration += 1;
}

/// One SGD step; returns the loss measured before the update.
pub fn sgd_step(state: &mut DnnState, x: &[f64], label: &[f64]) -> Result<f64, DnnError> {
    let trace = feedforward(state, x)?;
    let deltas = backprop(state, &trace, label)?;
    let loss = squared_error(&trace.output, label);
    update(state, &trace, &deltas);
    Ok(loss)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Top-1 accuracy of `predict` over `(input, one-hot label)` pairs.
pub fn accuracy<'a, I, F>(samples: I, mut predict: F) -> f64
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut hits = 0usize;
    let mut total = 0usize;
    for (x, y) in samples {
        if argmax(&predict(x)) == argmax(y) {
            hits += 1;
        }
        total += 1;
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Max-abs distance between two weight lists of equal shapes.
pub fn weights_distance(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| linalg::max_abs_diff(x.as_slice(), y.as_slice()))
        .fold(0.0, f64::max)
}
