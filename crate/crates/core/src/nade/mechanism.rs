use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::{LayerJson, Mlp};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::world::logistic;

pub const SIGMA_FLOOR: f64 = 1e-3;
pub const LOGIT_CLAMP: f64 = 15.0;
/// Rejection attempts before a draw is clamped into the support.
pub const SUPPORT_ATTEMPTS: usize = 100;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    Gaussian,
    Bernoulli,
}

impl HeadKind {
    pub fn outputs(self) -> usize {
        match self {
            HeadKind::Gaussian => 2,
            HeadKind::Bernoulli => 1,
        }
    }
}

/// Distribution parameters produced by a mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistParams {
    Gaussian { mu: f64, sigma: f64 },
    Bernoulli { p: f64 },
}

impl DistParams {
    /// Probability of `true` for a Bernoulli head.
    pub fn probability(&self) -> Option<f64> {
        match *self {
            DistParams::Bernoulli { p } => Some(p),
            DistParams::Gaussian { .. } => None,
        }
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Per-input affine standardization, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Standardization { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    /// Column means and population standard deviations; degenerate columns
    /// get unit scale.
    pub fn fit(columns: &[&[f64]]) -> Self {
        let mut mean = Vec::with_capacity(columns.len());
        let mut std = Vec::with_capacity(columns.len());
        for col in columns {
            let n = col.len().max(1) as f64;
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            mean.push(m);
            std.push(if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
        }
        Standardization { mean, std }
    }
}

/// Observations for one node: parent values (raw units) and the node's value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Samples {
    pub parents: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, parents: Vec<f64>, target: f64) {
        self.parents.push(parents);
        self.targets.push(target);
    }
}

/// One learned conditional distribution `P(node | parents)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub node: String,
    pub parents: Vec<String>,
    pub head: HeadKind,
    pub standardization: Standardization,
    pub net: Mlp,
}

impl Mechanism {
    /// A freshly initialised mechanism. Root nodes see a single constant input.
    pub fn new(node: impl Into<String>, parents: Vec<String>, head: HeadKind, hidden: &[usize], rng: &mut Rng) -> Self {
        let input = parents.len().max(1);
        Mechanism {
            node: node.into(),
            standardization: Standardization::identity(parents.len()),
            net: Mlp::new(input, hidden, head.outputs(), rng),
            parents,
            head,
        }
    }

    pub fn is_root(&self) -> bool {
        self.parents.is_empty()
    }

    /// Network input for raw parent values. Roots take `[1.0]`, and accept
    /// either an empty slice or that constant.
    pub fn encode(&self, parent_values: &[f64]) -> Result<Vec<f64>> {
        if self.is_root() {
            return match parent_values {
                [] | [1.0] => Ok(vec![1.0]),
                _ => Err(Error::DimensionMismatch { expected: 0, got: parent_values.len() }),
            };
        }
        if parent_values.len() != self.parents.len() {
            return Err(Error::DimensionMismatch { expected: self.parents.len(), got: parent_values.len() });
        }
        let s = &self.standardization;
        Ok(parent_values.iter().zip(s.mean.iter().zip(&s.std)).map(|(x, (m, sd))| (x - m) / sd).collect())
    }

    fn params_from_output(&self, out: &[f64]) -> DistParams {
        match self.head {
            HeadKind::Gaussian => DistParams::Gaussian { mu: out[0], sigma: softplus(out[1]) + SIGMA_FLOOR },
            HeadKind::Bernoulli => DistParams::Bernoulli { p: logistic(out[0].clamp(-LOGIT_CLAMP, LOGIT_CLAMP)) },
        }
    }

    pub fn forward(&self, parent_values: &[f64]) -> Result<DistParams> {
        let mut out = [0.0; 2];
        let k = self.head.outputs();
        if self.is_root() && matches!(parent_values, [] | [1.0]) {
            self.net.forward_into(&[1.0], &mut out[..k]);
        } else if !self.is_root() && parent_values.len() == self.parents.len() && parent_values.len() <= 16 {
            let mut x = [0.0; 16];
            let s = &self.standardization;
            for (i, v) in parent_values.iter().enumerate() {
                x[i] = (v - s.mean[i]) / s.std[i];
            }
            self.net.forward_into(&x[..parent_values.len()], &mut out[..k]);
        } else {
            let x = self.encode(parent_values)?;
            self.net.forward_into(&x, &mut out[..k]);
        }
        Ok(self.params_from_output(&out[..k]))
    }

    /// NLL of one observation and its gradient with respect to the network
    /// outputs.
    fn point_loss(&self, out: &[f64], target: f64) -> (f64, [f64; 2]) {
        match self.head {
            HeadKind::Gaussian => {
                let (mu, raw) = (out[0], out[1]);
                let sigma = softplus(raw) + SIGMA_FLOOR;
                let r = (target - mu) / sigma;
                let loss = 0.5 * r * r + sigma.ln() + HALF_LN_2PI;
                let d_mu = -r / sigma;
                let d_sigma = (1.0 - r * r) / sigma;
                (loss, [d_mu, d_sigma * logistic(raw)])
            }
            HeadKind::Bernoulli => {
                let raw = out[0];
                let logit = raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
                // -log p = softplus(-logit), -log(1-p) = softplus(logit)
                let loss = target * softplus(-logit) + (1.0 - target) * softplus(logit);
                let d = if raw.abs() > LOGIT_CLAMP { 0.0 } else { logistic(logit) - target };
                (loss, [d, 0.0])
            }
        }
    }

    /// Mean negative log-likelihood over `batch`.
    pub fn negative_log_likelihood(&self, batch: &Samples) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for (p, &y) in batch.parents.iter().zip(&batch.targets) {
            let out = self.net.forward(&self.encode(p)?);
            total += self.point_loss(&out, y).0;
        }
        let nll = total / batch.len() as f64;
        if nll.is_finite() {
            Ok(nll)
        } else {
            Err(Error::NonFiniteLoss)
        }
    }

    /// Mean NLL and its exact gradient with respect to the flat network
    /// parameters.
    pub fn loss_and_gradient(&self, batch: &Samples) -> Result<(f64, Vec<f64>)> {
        self.loss_and_gradient_rows(batch, 0..batch.len())
    }

    pub(crate) fn loss_and_gradient_rows(
        &self,
        batch: &Samples,
        rows: impl ExactSizeIterator<Item = usize>,
    ) -> Result<(f64, Vec<f64>)> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let scale = 1.0 / n as f64;
        let mut grad = vec![0.0; self.net.params().len()];
        let mut total = 0.0;
        let k = self.head.outputs();
        for r in rows {
            let trace = self.net.forward_trace(&self.encode(&batch.parents[r])?);
            let (loss, d_out) = self.point_loss(&trace.output, batch.targets[r]);
            total += loss;
            self.net.backward(&trace, &d_out[..k], scale, &mut grad);
        }
        let nll = total * scale;
        if !nll.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        Ok((nll, grad))
    }

    pub fn gradients(&self, batch: &Samples) -> Result<Vec<f64>> {
        self.loss_and_gradient(batch).map(|(_, g)| g)
    }

    /// Draws a value: a real for Gaussian heads, 0/1 for Bernoulli heads.
    pub fn sample(&self, parent_values: &[f64], rng: &mut Rng) -> Result<f64> {
        Ok(draw(self.forward(parent_values)?, rng))
    }

    /// Like [`sample`](Self::sample), but Gaussian draws are kept inside
    /// `[lo, hi]` by rejection, clamping after [`SUPPORT_ATTEMPTS`] misses.
    pub fn sample_within(&self, parent_values: &[f64], support: Option<(f64, f64)>, rng: &mut Rng) -> Result<f64> {
        let params = self.forward(parent_values)?;
        Ok(draw_within(params, support, rng))
    }
}

pub fn draw(params: DistParams, rng: &mut Rng) -> f64 {
    match params {
        DistParams::Gaussian { mu, sigma } => Normal::new(mu, sigma).expect("sigma above floor").sample(rng),
        DistParams::Bernoulli { p } => f64::from(u8::from(rng.random::<f64>() < p)),
    }
}

pub fn draw_within(params: DistParams, support: Option<(f64, f64)>, rng: &mut Rng) -> f64 {
    match (params, support) {
        (DistParams::Gaussian { mu, sigma }, Some((lo, hi))) => {
            let normal = Normal::new(mu, sigma).expect("sigma above floor");
            let mut x = normal.sample(rng);
            for _ in 1..SUPPORT_ATTEMPTS {
                if (lo..=hi).contains(&x) {
                    return x;
                }
                x = normal.sample(rng);
            }
            x.clamp(lo, hi)
        }
        (p, _) => draw(p, rng),
    }
}

// -- JSON form ---------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub(crate) struct MechanismJson {
    node: String,
    parents: Vec<String>,
    head: HeadKind,
    standardization: Standardization,
    layers: Vec<LayerJson>,
}

impl Serialize for Mechanism {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MechanismJson {
            node: self.node.clone(),
            parents: self.parents.clone(),
            head: self.head,
            standardization: self.standardization.clone(),
            layers: self.net.to_layers(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mechanism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MechanismJson::deserialize(d)?;
        let net = Mlp::from_layers(&raw.layers).map_err(D::Error::custom)?;
        let inputs = raw.parents.len().max(1);
        if net.input_dim() != inputs {
            return Err(D::Error::custom(format!(
                "`{}` network takes {} inputs but has {} parents",
                raw.node,
                net.input_dim(),
                raw.parents.len()
            )));
        }
        if net.output_dim() != raw.head.outputs() {
            return Err(D::Error::custom("network output does not match head"));
        }
        let st = &raw.standardization;
        if st.mean.len() != raw.parents.len() || st.std.len() != raw.parents.len() {
            return Err(D::Error::custom("standardization does not match parents"));
        }
        Ok(Mechanism {
            node: raw.node,
            parents: raw.parents,
            head: raw.head,
            standardization: raw.standardization,
            net,
        })
    }
}
