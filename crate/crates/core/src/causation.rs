//! Probabilistic actual causation along a chosen causal path.
//!
//! For cause `X` with actual value `x`, the reference probabilities fix the
//! off-path variables `W` and `X = x`, plus every subset `Z'` of the on-path
//! mediators at their observed values. The contrastive curve fixes `W` and
//! `X = x'` and lets the mediators respond. `x'` raises the probability of
//! the outcome relative to `x` being the cause when every reference probability
//! exceeds the contrastive one.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, InterventionSet};
use crate::intervention::{do_curve, interventional_probability, linspace, DoEstimate, TrainedModel, DEFAULT_SAMPLES};
use crate::world::{Trial, FU, RC, RD, RV};

pub const MAX_MEDIATORS: usize = 12;
pub const DEFAULT_GRID_POINTS: usize = 101;

/// A PC1 question: is `cause` taking its value in `context` an actual cause
/// of `outcome` along `path`?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcQuery {
    pub cause: String,
    pub outcome: String,
    pub path: Vec<String>,
    /// Observed values of every node except the outcome.
    pub context: InterventionSet,
    pub grid: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
}

impl AcQuery {
    /// Query along [`designated_path`] with the default grid over the cause's
    /// support.
    pub fn new(model: &TrainedModel, cause: &str, outcome: &str, context: InterventionSet) -> Result<Self> {
        let graph = model.graph();
        let path = designated_path(graph, cause, outcome)?;
        let (lo, hi) = graph
            .kind(cause)?
            .support()
            .ok_or_else(|| Error::InvalidConfig(format!("cause `{cause}` is not continuous")))?;
        Ok(AcQuery {
            cause: cause.to_string(),
            outcome: outcome.to_string(),
            path,
            context,
            grid: linspace(lo, hi, DEFAULT_GRID_POINTS),
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
        })
    }

    pub fn with_path(mut self, path: Vec<String>) -> Self {
        self.path = path;
        self
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_samples(mut self, n_samples: usize, seed: u64) -> Self {
        self.n_samples = n_samples;
        self.seed = seed;
        self
    }

    /// The cause's value in the context.
    pub fn actual(&self) -> Result<f64> {
        self.context
            .get(&self.cause)
            .map(|v| v.as_f64())
            .ok_or_else(|| Error::InvalidConfig(format!("context has no value for `{}`", self.cause)))
    }

    pub fn validate(&self, model: &TrainedModel) -> Result<()> {
        let graph = model.graph();
        if self.path.first() != Some(&self.cause) || self.path.last() != Some(&self.outcome) {
            return Err(Error::PathInvalid(format!("path must run from {} to {}", self.cause, self.outcome)));
        }
        for node in graph.node_names() {
            if node == self.outcome {
                if self.context.contains(node) {
                    return Err(Error::InvalidIntervention(format!("context fixes the outcome `{node}`")));
                }
            } else if !self.context.contains(node) {
                return Err(Error::InvalidIntervention(format!("context has no value for `{node}`")));
            }
        }
        self.context.validate(graph)?;
        let kind = graph.kind(&self.cause)?;
        if let Some(&bad) = self.grid.iter().find(|&&v| !kind.admits(v.into())) {
            return Err(Error::InvalidIntervention(format!(
                "grid value {bad} is outside the support of `{}`",
                self.cause
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        let partition = graph.partition_for_path(&self.path, &self.outcome)?;
        if partition.z.len() > MAX_MEDIATORS {
            return Err(Error::TooManyMediators(partition.z.len()));
        }
        Ok(())
    }

    fn partition(&self, model: &TrainedModel) -> Result<(InterventionSet, Vec<String>)> {
        self.validate(model)?;
        let p = model.graph().partition_for_path(&self.path, &self.outcome)?;
        let w = p.w.iter().map(|n| (n.clone(), self.context.get(n).expect("validated"))).collect();
        Ok((w, p.z))
    }
}

/// The longest directed path from `cause` to `outcome`; among equally long
/// paths the lexicographically smallest.
pub fn designated_path(graph: &CausalGraph, cause: &str, outcome: &str) -> Result<Vec<String>> {
    let mut paths = graph.directed_paths(cause, outcome)?;
    paths.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    paths.into_iter().next().ok_or_else(|| Error::PathInvalid(format!("no directed path from {cause} to {outcome}")))
}

/// Observed values of a pouring trial, spillage excluded.
pub fn trial_context(trial: &Trial) -> InterventionSet {
    [RC, FU, RD, RV].iter().map(|&v| (v, trial.get(v).expect("trial variable"))).collect()
}

/// Canonical key for a mediator subset, e.g. `{}` or `{RV}`.
pub fn subset_key(subset: &[String]) -> String {
    format!("{{{}}}", subset.join(","))
}

/// Reference probability for every subset of the mediators, keyed by
/// [`subset_key`].
pub fn reference_probabilities(model: &TrainedModel, query: &AcQuery) -> Result<BTreeMap<String, DoEstimate>> {
    let (w, z) = query.partition(model)?;
    let x = query.actual()?;
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << z.len()) {
        let subset: Vec<String> =
            z.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| n.clone()).collect();
        let mut assignments = w.clone().with(query.cause.clone(), x);
        for n in &subset {
            assignments.set(n.clone(), query.context.get(n).expect("validated"));
        }
        let est = interventional_probability(model, &query.outcome, &assignments, query.n_samples, query.seed)?;
        out.insert(subset_key(&subset), est);
    }
    Ok(out)
}

/// Contrastive probability at each grid value, mediators left to respond.
pub fn contrastive_curve(model: &TrainedModel, query: &AcQuery) -> Result<Vec<(f64, DoEstimate)>> {
    let (w, _) = query.partition(model)?;
    do_curve(model, &query.outcome, &query.cause, &query.grid, &w, query.n_samples, query.seed)
}

/// Outcome of a single PC1 comparison with all the estimates behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcEvidence {
    pub holds: bool,
    pub contrast: f64,
    pub rhs: DoEstimate,
    pub lhs: BTreeMap<String, DoEstimate>,
}

fn raises(lhs: &BTreeMap<String, DoEstimate>, rhs: &DoEstimate) -> bool {
    lhs.values().all(|e| e.probability > rhs.probability)
}

pub fn ac_test(model: &TrainedModel, query: &AcQuery, contrast: f64) -> Result<AcEvidence> {
    let single = AcQuery { grid: vec![contrast], ..query.clone() };
    let lhs = reference_probabilities(model, &single)?;
    let (_, rhs) = contrastive_curve(model, &single)?[0];
    Ok(AcEvidence { holds: raises(&lhs, &rhs), contrast, rhs, lhs })
}

/// Reference and contrastive probabilities over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcRegion {
    pub cause: String,
    pub outcome: String,
    pub path: Vec<String>,
    pub mediators: Vec<String>,
    pub context: InterventionSet,
    pub actual: f64,
    pub grid: Vec<f64>,
    pub rhs: Vec<DoEstimate>,
    pub lhs: BTreeMap<String, DoEstimate>,
    pub raising: Vec<bool>,
}

impl AcRegion {
    /// Reference probability with every mediator fixed.
    pub fn full_reference(&self) -> Result<&DoEstimate> {
        let key = subset_key(&self.mediators);
        self.lhs.get(&key).ok_or_else(|| Error::Schema(format!("region has no reference for {key}")))
    }

    /// Grid values where probability raising holds.
    pub fn raising_values(&self) -> Vec<f64> {
        self.grid.iter().zip(&self.raising).filter(|(_, r)| **r).map(|(v, _)| *v).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per grid value: contrastive estimate, raising flag, and each
    /// reference probability repeated for plotting.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["value".to_string(), "rhs".into(), "rhs_std_error".into(), "raising".into()];
        for key in self.lhs.keys() {
            header.push(format!("lhs{key}"));
        }
        w.write_record(&header)?;
        for ((v, r), raising) in self.grid.iter().zip(&self.rhs).zip(&self.raising) {
            let mut row = vec![v.to_string(), r.probability.to_string(), r.std_error.to_string(), raising.to_string()];
            row.extend(self.lhs.values().map(|e| e.probability.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn raising_region(model: &TrainedModel, query: &AcQuery) -> Result<AcRegion> {
    let (_, mediators) = query.partition(model)?;
    let lhs = reference_probabilities(model, query)?;
    let curve = contrastive_curve(model, query)?;
    let raising = curve.iter().map(|(_, r)| raises(&lhs, r)).collect();
    Ok(AcRegion {
        cause: query.cause.clone(),
        outcome: query.outcome.clone(),
        path: query.path.clone(),
        mediators,
        context: query.context.clone(),
        actual: query.actual()?,
        grid: curve.iter().map(|(v, _)| *v).collect(),
        rhs: curve.into_iter().map(|(_, e)| e).collect(),
        lhs,
        raising,
    })
}
