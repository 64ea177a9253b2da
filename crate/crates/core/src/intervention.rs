//! Interventional queries on a trained model.
//!
//! `P(outcome | do(...))` is estimated by forward sampling the mutilated graph:
//! intervened nodes are pinned, the remaining ancestors of the outcome are
//! drawn from their mechanisms in topological order, and the outcome's head
//! probability is averaged rather than sampled.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, InterventionSet, VariableKind};
use crate::nade::{self, draw_within, HeadKind, Mechanism, TrainConfig};
use crate::rng::{derive_seed, seeded};

pub const DEFAULT_SAMPLES: usize = 10_000;

/// A causal graph with one learned mechanism per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    graph: CausalGraph,
    /// In graph declaration order.
    mechanisms: Vec<Mechanism>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    graph: CausalGraph,
    mechanisms: Vec<Mechanism>,
}

fn head_for(kind: VariableKind) -> HeadKind {
    if kind.is_binary() {
        HeadKind::Bernoulli
    } else {
        HeadKind::Gaussian
    }
}

impl TrainedModel {
    pub fn new(graph: CausalGraph, mechanisms: Vec<Mechanism>) -> Result<Self> {
        let mut by_name: BTreeMap<String, Mechanism> = BTreeMap::new();
        for m in mechanisms {
            if !graph.contains(&m.node) {
                return Err(Error::UnknownNode(m.node));
            }
            if by_name.contains_key(&m.node) {
                return Err(Error::Schema(format!("two mechanisms for `{}`", m.node)));
            }
            by_name.insert(m.node.clone(), m);
        }
        let mut ordered = Vec::with_capacity(graph.len());
        for node in graph.nodes() {
            let m =
                by_name.remove(&node.name).ok_or_else(|| Error::Schema(format!("no mechanism for `{}`", node.name)))?;
            if m.parents != graph.parents(&node.name)? {
                return Err(Error::Schema(format!(
                    "mechanism parents of `{}` are {:?}, graph says {:?}",
                    node.name,
                    m.parents,
                    graph.parents(&node.name)?
                )));
            }
            if m.head != head_for(node.kind) {
                return Err(Error::Schema(format!("head of `{}` does not match its kind", node.name)));
            }
            ordered.push(m);
        }
        Ok(TrainedModel { graph, mechanisms: ordered })
    }

    /// Fits every node's mechanism on `data`. Node `i` (declaration order)
    /// trains with seed `derive_seed(config.seed, i)`.
    pub fn train(graph: &CausalGraph, data: &Dataset, config: &TrainConfig) -> Result<Self> {
        let mechanisms = graph
            .nodes()
            .par_iter()
            .enumerate()
            .map(|(i, node)| {
                let cfg = TrainConfig { seed: derive_seed(config.seed, i as u64), ..config.clone() };
                let parents = graph.parents(&node.name)?;
                nade::fit(data, &node.name, head_for(node.kind), &parents, &cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        TrainedModel::new(graph.clone(), mechanisms)
    }

    /// Untrained mechanisms with seeded random weights and identity
    /// standardization.
    pub fn initialized(graph: &CausalGraph, hidden: &[usize], seed: u64) -> Result<Self> {
        let mechanisms = graph
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let mut rng = seeded(derive_seed(seed, i as u64));
                let parents = graph.parents(&node.name)?;
                Ok(Mechanism::new(node.name.clone(), parents, head_for(node.kind), hidden, &mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        TrainedModel::new(graph.clone(), mechanisms)
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn mechanisms(&self) -> &[Mechanism] {
        &self.mechanisms
    }

    pub fn mechanism(&self, node: &str) -> Result<&Mechanism> {
        self.mechanisms.iter().find(|m| m.node == node).ok_or_else(|| Error::UnknownNode(node.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let bundle = ModelJson { graph: self.graph.clone(), mechanisms: self.mechanisms.clone() };
        Ok(serde_json::to_string_pretty(&bundle)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: ModelJson = serde_json::from_str(text)?;
        TrainedModel::new(bundle.graph, bundle.mechanisms)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        TrainedModel::from_json(&std::fs::read_to_string(path)?)
    }

    fn index(&self, node: &str) -> Result<usize> {
        self.graph.nodes().iter().position(|n| n.name == node).ok_or_else(|| Error::UnknownNode(node.to_string()))
    }
}

/// A Monte Carlo estimate of an interventional probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

struct Plan<'a> {
    model: &'a TrainedModel,
    values: Vec<f64>,
    /// (node index, parent indices, support) in topological order.
    sampled: Vec<(usize, Vec<usize>, Option<(f64, f64)>)>,
    outcome: usize,
    outcome_parents: Vec<usize>,
}

impl<'a> Plan<'a> {
    fn new(model: &'a TrainedModel, outcome: &str, assignments: &InterventionSet) -> Result<Self> {
        let graph = &model.graph;
        let kind = graph.kind(outcome)?;
        if !kind.is_binary() {
            return Err(Error::OutcomeNotBinary(outcome.to_string()));
        }
        if assignments.contains(outcome) {
            return Err(Error::InvalidIntervention(format!("outcome `{outcome}` cannot be intervened on")));
        }
        assignments.validate(graph)?;
        let parent_idx = |n: &str| -> Result<Vec<usize>> { graph.parents(n)?.iter().map(|p| model.index(p)).collect() };
        let mut values = vec![f64::NAN; graph.len()];
        for (name, v) in assignments.iter() {
            values[model.index(name)?] = v.as_f64();
        }
        // ancestors of the outcome in the mutilated graph
        let mut needed = vec![false; graph.len()];
        let mut stack = graph.parents(outcome)?;
        while let Some(n) = stack.pop() {
            let i = model.index(&n)?;
            if needed[i] || assignments.contains(&n) {
                continue;
            }
            needed[i] = true;
            stack.extend(graph.parents(&n)?);
        }
        let mut sampled = Vec::new();
        for name in graph.topological_order() {
            let i = model.index(&name)?;
            if needed[i] {
                sampled.push((i, parent_idx(&name)?, graph.kind(&name)?.support()));
            }
        }
        Ok(Plan { model, values, sampled, outcome: model.index(outcome)?, outcome_parents: parent_idx(outcome)? })
    }

    fn outcome_probability(&self, values: &[f64], buf: &mut Vec<f64>) -> Result<f64> {
        buf.clear();
        buf.extend(self.outcome_parents.iter().map(|&p| values[p]));
        let params = self.model.mechanisms[self.outcome].forward(buf)?;
        Ok(params.probability().expect("binary outcome has a Bernoulli head"))
    }

    fn estimate(&self, n_samples: usize, seed: u64) -> Result<DoEstimate> {
        if n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        let mut buf = Vec::new();
        if self.sampled.is_empty() {
            let p = self.outcome_probability(&self.values, &mut buf)?;
            return Ok(DoEstimate { probability: p, std_error: 0.0, n_samples, seed });
        }
        let mut rng = seeded(seed);
        let mut values = self.values.clone();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n_samples {
            for (i, parents, support) in &self.sampled {
                buf.clear();
                buf.extend(parents.iter().map(|&p| values[p]));
                let params = self.model.mechanisms[*i].forward(&buf)?;
                values[*i] = draw_within(params, *support, &mut rng);
            }
            let p = self.outcome_probability(&values, &mut buf)?;
            sum += p;
            sum_sq += p * p;
        }
        let n = n_samples as f64;
        let mean = sum / n;
        let var = if n_samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Ok(DoEstimate { probability: mean, std_error: (var / n).sqrt(), n_samples, seed })
    }
}

/// `P(outcome = true | do(assignments))`.
pub fn interventional_probability(
    model: &TrainedModel,
    outcome: &str,
    assignments: &InterventionSet,
    n_samples: usize,
    seed: u64,
) -> Result<DoEstimate> {
    Plan::new(model, outcome, assignments)?.estimate(n_samples, seed)
}

/// Nodes integrated out by [`interventional_probability`], in sampling order.
pub fn sampled_nodes(model: &TrainedModel, outcome: &str, assignments: &InterventionSet) -> Result<Vec<String>> {
    let plan = Plan::new(model, outcome, assignments)?;
    let nodes = model.graph.nodes();
    Ok(plan.sampled.iter().map(|(i, _, _)| nodes[*i].name.clone()).collect())
}

/// `P(outcome = true | parents)` from a single forward pass. Keys that are not
/// parents of `outcome` are ignored.
pub fn conditional_probability(model: &TrainedModel, outcome: &str, assignment: &InterventionSet) -> Result<f64> {
    if !model.graph.kind(outcome)?.is_binary() {
        return Err(Error::OutcomeNotBinary(outcome.to_string()));
    }
    let mech = model.mechanism(outcome)?;
    let x = mech
        .parents
        .iter()
        .map(|p| {
            assignment
                .get(p)
                .map(|v| v.as_f64())
                .ok_or_else(|| Error::MissingParent { node: outcome.to_string(), parent: p.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mech.forward(&x)?.probability().expect("binary outcome has a Bernoulli head"))
}

/// One estimate per grid value of `node`, all sharing `seed`.
pub fn do_curve(
    model: &TrainedModel,
    outcome: &str,
    node: &str,
    grid: &[f64],
    context: &InterventionSet,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(f64, DoEstimate)>> {
    if context.contains(node) {
        return Err(Error::InvalidIntervention(format!("`{node}` is both swept and fixed")));
    }
    model.graph.kind(node)?;
    grid.par_iter()
        .map(|&v| {
            let assignments = context.clone().with(node, v);
            interventional_probability(model, outcome, &assignments, n_samples, seed).map(|e| (v, e))
        })
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn write_curve_csv<W: Write>(out: W, curve: &[(f64, DoEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["value", "probability", "std_error", "n_samples", "seed"])?;
    for (v, e) in curve {
        w.write_record([
            v.to_string(),
            e.probability.to_string(),
            e.std_error.to_string(),
            e.n_samples.to_string(),
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
