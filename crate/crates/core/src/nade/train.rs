use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mechanism::{HeadKind, Mechanism, Samples, Standardization};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

pub const MIN_ROWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            decay: 0.9,
            epsilon: 1e-8,
            epochs: 300,
            batch_size: 128,
            hidden: vec![16, 16],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.decay) {
            return bad("decay must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }
}

/// A fitted mechanism with its full-data NLL before training and after each epoch.
#[derive(Debug, Clone)]
pub struct Fit {
    pub mechanism: Mechanism,
    pub initial_nll: f64,
    pub history: Vec<f64>,
    pub best_epoch: Option<usize>,
}

impl Fit {
    pub fn final_nll(&self) -> f64 {
        self.best_epoch.map_or(self.initial_nll, |e| self.history[e])
    }
}

/// Pulls `(parents, node)` rows out of a dataset.
pub fn samples_from(data: &Dataset, node: &str, parents: &[String]) -> Result<Samples> {
    let target = data.column(node)?;
    let cols = parents.iter().map(|p| data.column(p)).collect::<Result<Vec<_>>>()?;
    Ok(Samples {
        parents: (0..data.n_rows()).map(|r| cols.iter().map(|c| c[r]).collect()).collect(),
        targets: target.to_vec(),
    })
}

pub fn fit(data: &Dataset, node: &str, head: HeadKind, parents: &[String], config: &TrainConfig) -> Result<Mechanism> {
    fit_with_history(data, node, head, parents, config).map(|f| f.mechanism)
}

/// Minibatch RMSProp on the mean NLL. The returned parameters are those of the
/// epoch with the lowest full-data NLL, or the initial ones if no epoch beat them.
pub fn fit_with_history(
    data: &Dataset,
    node: &str,
    head: HeadKind,
    parents: &[String],
    config: &TrainConfig,
) -> Result<Fit> {
    config.validate()?;
    if data.n_rows() < MIN_ROWS {
        return Err(Error::InsufficientData { rows: data.n_rows(), required: MIN_ROWS });
    }
    let samples = samples_from(data, node, parents)?;
    if head == HeadKind::Bernoulli && samples.targets.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::Schema(format!("`{node}` has non-binary values")));
    }
    let mut rng = seeded(config.seed);
    let mut mech = Mechanism::new(node, parents.to_vec(), head, &config.hidden, &mut rng);
    let cols: Vec<&[f64]> = parents.iter().map(|p| data.column(p)).collect::<Result<_>>()?;
    mech.standardization = Standardization::fit(&cols);

    let initial_nll = mech.negative_log_likelihood(&samples)?;
    let mut best = (initial_nll, mech.net.params().to_vec(), None);
    let mut cache = vec![0.0; mech.net.params().len()];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let (_, grad) =
                mech.loss_and_gradient_rows(&samples, chunk.iter().copied()).map_err(|_| Error::Diverged(epoch))?;
            for ((p, c), g) in mech.net.params_mut().iter_mut().zip(&mut cache).zip(&grad) {
                *c = config.decay * *c + (1.0 - config.decay) * g * g;
                *p -= config.learning_rate * g / (c.sqrt() + config.epsilon);
            }
        }
        let nll = mech.negative_log_likelihood(&samples).map_err(|_| Error::Diverged(epoch))?;
        history.push(nll);
        if nll < best.0 {
            best = (nll, mech.net.params().to_vec(), Some(epoch));
        }
    }
    mech.net.params_mut().copy_from_slice(&best.1);
    Ok(Fit { mechanism: mech, initial_nll, history, best_epoch: best.2 })
}
