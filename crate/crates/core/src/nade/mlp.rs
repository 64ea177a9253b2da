//! Fully connected tanh network with a linear output layer.
//!
//! All weights live in one flat buffer so optimizers and gradient checks can
//! treat the network as a plain parameter vector. Layer `l` occupies
//! `out * in` row-major weights followed by `out` biases.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const STACK_WIDTH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[l]` the tanh output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerJson {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Mlp {
    /// Network `input -> hidden[0] -> ... -> output`, weights drawn uniformly
    /// from `±1/sqrt(fan_in)`.
    pub fn new(input: usize, hidden: &[usize], output: usize, rng: &mut Rng) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let mut params = Vec::with_capacity(Self::count(&sizes));
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out + fan_out {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Mlp { sizes, params }
    }

    pub fn zeros(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let params = vec![0.0; Self::count(&sizes)];
        Mlp { sizes, params }
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn layer_offsets(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_layers());
        let mut at = 0;
        for pair in self.sizes.windows(2) {
            out.push((at, at + pair[0] * pair[1]));
            at += pair[0] * pair[1] + pair[1];
        }
        out
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.forward_into(input, &mut out);
        out
    }

    /// Forward pass writing the output into `out`; narrow networks run
    /// without heap allocation.
    pub fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        let width = self.sizes.iter().copied().max().unwrap_or(0);
        if width > STACK_WIDTH {
            out.copy_from_slice(&self.forward_trace(input).output);
            return;
        }
        let mut a = [0.0; STACK_WIDTH];
        let mut b = [0.0; STACK_WIDTH];
        a[..input.len()].copy_from_slice(input);
        let last = self.n_layers() - 1;
        let mut at = 0;
        for l in 0..=last {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[at..at + n_in * n_out];
            let bias = &self.params[at + n_in * n_out..at + n_in * n_out + n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = bias[o] + row.iter().zip(&a[..n_in]).map(|(w, x)| w * x).sum::<f64>();
                b[o] = if l < last { z.tanh() } else { z };
            }
            std::mem::swap(&mut a, &mut b);
            at += n_in * n_out + n_out;
        }
        out.copy_from_slice(&a[..self.output_dim()]);
    }

    pub fn forward_trace(&self, input: &[f64]) -> Trace {
        let offsets = self.layer_offsets();
        let mut acts = Vec::with_capacity(self.n_layers());
        let mut cur = input.to_vec();
        for (l, &(wo, bo)) in offsets.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[wo..wo + n_in * n_out];
            let b = &self.params[bo..bo + n_out];
            let mut next: Vec<f64> = b.to_vec();
            for (o, z) in next.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *z += row.iter().zip(&cur).map(|(a, x)| a * x).sum::<f64>();
            }
            if l + 1 < offsets.len() {
                next.iter_mut().for_each(|z| *z = z.tanh());
            }
            acts.push(std::mem::replace(&mut cur, next));
        }
        Trace { acts, output: cur }
    }

    /// Accumulates `scale * d(loss)/d(params)` into `grad`, given the loss
    /// gradient with respect to the network output.
    pub fn backward(&self, trace: &Trace, d_output: &[f64], scale: f64, grad: &mut [f64]) {
        let offsets = self.layer_offsets();
        let mut delta: Vec<f64> = d_output.iter().map(|d| d * scale).collect();
        for l in (0..offsets.len()).rev() {
            let (wo, bo) = offsets[l];
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &trace.acts[l];
            for o in 0..n_out {
                grad[bo + o] += delta[o];
                let row = &mut grad[wo + o * n_in..wo + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[wo..wo + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                for (p, a) in prev.iter_mut().zip(row) {
                    *p += delta[o] * a;
                }
            }
            // input of layer l is tanh output of the previous layer
            for (p, h) in prev.iter_mut().zip(input) {
                *p *= 1.0 - h * h;
            }
            delta = prev;
        }
    }

    pub fn to_layers(&self) -> Vec<LayerJson> {
        self.layer_offsets()
            .iter()
            .enumerate()
            .map(|(l, &(wo, bo))| {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                LayerJson {
                    w: (0..n_out).map(|o| self.params[wo + o * n_in..wo + (o + 1) * n_in].to_vec()).collect(),
                    b: self.params[bo..bo + n_out].to_vec(),
                }
            })
            .collect()
    }

    pub fn from_layers(layers: &[LayerJson]) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Schema("network has no layers".into()));
        }
        let mut sizes = vec![layers[0].w.first().map_or(0, Vec::len)];
        let mut params = Vec::new();
        for layer in layers {
            let n_in = *sizes.last().unwrap();
            if layer.w.len() != layer.b.len() {
                return Err(Error::DimensionMismatch { expected: layer.w.len(), got: layer.b.len() });
            }
            for row in &layer.w {
                if row.len() != n_in {
                    return Err(Error::DimensionMismatch { expected: n_in, got: row.len() });
                }
                params.extend_from_slice(row);
            }
            params.extend_from_slice(&layer.b);
            sizes.push(layer.b.len());
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Schema("non-finite weight".into()));
        }
        Ok(Mlp { sizes, params })
    }
}
