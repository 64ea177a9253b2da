//! End-to-end evaluation on held-out trials: outcome prediction, coverage of
//! alternative parameters, and replay success of the suggested corrections.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causation::trial_context;
use crate::error::{Error, Result};
use crate::intervention::{conditional_probability, TrainedModel};
use crate::rng::{derive_seed, seeded};
use crate::selection::{select_for_trial, GridConfig, SelectionPolicy, SelectionResult};
use crate::world::{Overrides, Trial, WorldConfig, FU, RC, RD, S};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub policy: SelectionPolicy,
    pub variables: Vec<String>,
    pub grid: GridConfig,
    pub replications: usize,
    /// Trials drawn for the per-trial success histogram.
    pub histogram_trials: usize,
    /// Analyse only the first this-many spillage trials.
    pub max_trials: Option<usize>,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            policy: SelectionPolicy::default(),
            variables: vec![RD.into(), FU.into(), RC.into()],
            grid: GridConfig::default(),
            replications: 10,
            histogram_trials: 100,
            max_trials: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_negative: usize,
    pub true_negative: usize,
    pub false_positive: usize,
}

impl ConfusionMatrix {
    pub fn true_positive_rate(&self) -> Option<f64> {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn true_negative_rate(&self) -> Option<f64> {
        ratio(self.true_negative, self.true_negative + self.false_positive)
    }
}

/// `None` when the denominator is zero.
fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

/// Predicts spillage when `P(S | fu, rd, rv) >= 0.5`.
pub fn confusion_matrix(model: &TrainedModel, trials: &[Trial]) -> Result<ConfusionMatrix> {
    if trials.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut m = ConfusionMatrix::default();
    for t in trials {
        let predicted = conditional_probability(model, S, &trial_context(t))? >= 0.5;
        match (t.spillage, predicted) {
            (true, true) => m.true_positive += 1,
            (true, false) => m.false_negative += 1,
            (false, false) => m.true_negative += 1,
            (false, true) => m.false_positive += 1,
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_id: usize,
    pub result: SelectionResult,
    /// Successful (spill-free) replays under the alternative.
    pub successes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableReport {
    pub variable: String,
    pub spillage_trials: usize,
    pub alternatives: usize,
    pub no_change: usize,
    pub coverage: Option<f64>,
    pub replications: usize,
    pub success_rate: Option<f64>,
    /// Trial ids behind the histogram.
    pub histogram_trials: Vec<usize>,
    /// `histogram[k]` counts histogram trials with `k` successful replays.
    pub histogram: Vec<usize>,
    pub min_trial_success_rate: Option<f64>,
    pub trials: Vec<TrialOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub test_trials: usize,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub true_positive_rate: Option<f64>,
    pub true_negative_rate: Option<f64>,
    pub variables: Vec<VariableReport>,
}

impl EvaluationReport {
    pub fn variable(&self, name: &str) -> Option<&VariableReport> {
        self.variables.iter().find(|v| v.variable == name)
    }
}

pub fn evaluate(
    model: &TrainedModel,
    world: &WorldConfig,
    trials: &[Trial],
    config: &EvalConfig,
) -> Result<EvaluationReport> {
    config.policy.validate()?;
    let confusion = confusion_matrix(model, trials)?;
    let mut spills: Vec<(usize, &Trial)> = trials.iter().enumerate().filter(|(_, t)| t.spillage).collect();
    if let Some(max) = config.max_trials {
        spills.truncate(max);
    }
    let variables = config
        .variables
        .iter()
        .enumerate()
        .map(|(v, var)| evaluate_variable(model, world, &spills, var, v as u64, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        test_trials: trials.len(),
        threshold: config.policy.threshold,
        true_positive_rate: confusion.true_positive_rate(),
        true_negative_rate: confusion.true_negative_rate(),
        confusion,
        variables,
    })
}

fn evaluate_variable(
    model: &TrainedModel,
    world: &WorldConfig,
    spills: &[(usize, &Trial)],
    variable: &str,
    stream: u64,
    config: &EvalConfig,
) -> Result<VariableReport> {
    let replay_seed = derive_seed(config.seed, (1 << 32) + stream);
    let outcomes = spills
        .par_iter()
        .map(|&(id, trial)| {
            let mc_seed = derive_seed(config.seed, id as u64);
            let result = select_for_trial(model, trial, variable, &config.policy, &config.grid, mc_seed)?;
            let successes = match result.value() {
                Some(v) => Some(world.replay(
                    trial,
                    &Overrides::single(variable, v)?,
                    config.replications,
                    derive_seed(replay_seed, id as u64),
                )),
                None => None,
            };
            Ok(TrialOutcome { trial_id: id, result, successes })
        })
        .collect::<Result<Vec<_>>>()?;

    let covered: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.successes.is_some()).collect();
    let no_change = outcomes.iter().filter(|o| matches!(o.result, SelectionResult::NoChangeNeeded { .. })).count();
    let total_success: usize = covered.iter().filter_map(|o| o.successes).sum();

    let mut rng = seeded(derive_seed(replay_seed, u64::MAX));
    let k = config.histogram_trials.min(covered.len());
    let mut picked: Vec<&TrialOutcome> = sample(&mut rng, covered.len(), k).into_iter().map(|i| covered[i]).collect();
    picked.sort_by_key(|o| o.trial_id);
    let mut histogram = vec![0; config.replications + 1];
    for o in &picked {
        histogram[o.successes.expect("covered")] += 1;
    }
    let min_trial_success_rate =
        picked.iter().filter_map(|o| ratio(o.successes.expect("covered"), config.replications)).reduce(f64::min);

    Ok(VariableReport {
        variable: variable.to_string(),
        spillage_trials: spills.len(),
        alternatives: covered.len(),
        no_change,
        coverage: ratio(covered.len(), spills.len()),
        replications: config.replications,
        success_rate: ratio(total_success, covered.len() * config.replications),
        histogram_trials: picked.iter().map(|o| o.trial_id).collect(),
        histogram,
        min_trial_success_rate,
        trials: outcomes,
    })
}

/// Flat metric names for summaries; undefined rates are left out.
pub fn summary(report: &EvaluationReport) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut put = |k: String, v: Option<f64>| {
        if let Some(v) = v {
            out.insert(k, v);
        }
    };
    put("true_positive_rate".into(), report.true_positive_rate);
    put("true_negative_rate".into(), report.true_negative_rate);
    for v in &report.variables {
        let name = v.variable.to_lowercase();
        put(format!("{name}_coverage"), v.coverage);
        put(format!("{name}_success_rate"), v.success_rate);
    }
    out
}

/// Histogram rows `variable,successes,trials` for plotting.
pub fn write_histogram_csv<W: std::io::Write>(out: W, report: &EvaluationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "successes", "trials"])?;
    for v in &report.variables {
        for (k, count) in v.histogram.iter().enumerate() {
            w.write_record([v.variable.clone(), k.to_string(), count.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
