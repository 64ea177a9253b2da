//! Choosing an alternative parameter value from a raising region.

use serde::{Deserialize, Serialize};

use crate::causation::{raising_region, trial_context, AcQuery, AcRegion};
use crate::error::{Error, Result};
use crate::intervention::TrainedModel;
use crate::world::{Trial, S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    ClosestToActual,
    LowestProbability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub threshold: f64,
    #[serde(default)]
    pub criterion: Criterion,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy { threshold: 0.1, criterion: Criterion::ClosestToActual }
    }
}

impl SelectionPolicy {
    pub fn new(threshold: f64) -> Result<Self> {
        let p = SelectionPolicy { threshold, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.threshold > 0.0 && self.threshold < 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("threshold {} must lie strictly between 0 and 1", self.threshold)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SelectionResult {
    Alternative { value: f64, predicted_probability: f64 },
    NoChangeNeeded { reference_probability: f64 },
    NoAlternative,
}

impl SelectionResult {
    pub fn label(&self) -> &'static str {
        match self {
            SelectionResult::Alternative { .. } => "alternative",
            SelectionResult::NoChangeNeeded { .. } => "no_change",
            SelectionResult::NoAlternative => "none",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            SelectionResult::Alternative { value, .. } => Some(value),
            _ => None,
        }
    }
}

/// Raising region, then probability below threshold, then the policy's
/// criterion. Ties go to the smaller value.
pub fn select_alternative(region: &AcRegion, actual: f64, policy: &SelectionPolicy) -> Result<SelectionResult> {
    policy.validate()?;
    if region.rhs.len() != region.grid.len() || region.raising.len() != region.grid.len() {
        return Err(Error::GridMismatch("region arrays differ in length".into()));
    }
    if region.actual != actual {
        return Err(Error::GridMismatch(format!(
            "region was computed for {} = {}, not {actual}",
            region.cause, region.actual
        )));
    }
    let reference = region.full_reference()?.probability;
    if reference < policy.threshold {
        return Ok(SelectionResult::NoChangeNeeded { reference_probability: reference });
    }
    let candidates = region
        .grid
        .iter()
        .zip(&region.rhs)
        .zip(&region.raising)
        .filter(|&((_, e), &r)| r && e.probability < policy.threshold)
        .map(|((&v, e), _)| (v, e.probability));
    let score = |(v, p): (f64, f64)| match policy.criterion {
        Criterion::ClosestToActual => (v - actual).abs(),
        Criterion::LowestProbability => p,
    };
    let best = candidates.fold(None::<(f64, f64)>, |best, c| match best {
        Some(b) if score(b) < score(c) || (score(b) == score(c) && b.0 <= c.0) => Some(b),
        _ => Some(c),
    });
    Ok(match best {
        Some((value, predicted_probability)) => SelectionResult::Alternative { value, predicted_probability },
        None => SelectionResult::NoAlternative,
    })
}

/// Command-line and report form of a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub trial_id: Option<usize>,
    pub variable: String,
    pub result: String,
    pub value: Option<f64>,
    pub predicted_probability: Option<f64>,
    pub threshold: f64,
}

impl SelectionReport {
    pub fn new(trial_id: Option<usize>, variable: &str, result: &SelectionResult, policy: &SelectionPolicy) -> Self {
        let predicted_probability = match *result {
            SelectionResult::Alternative { predicted_probability, .. } => Some(predicted_probability),
            SelectionResult::NoChangeNeeded { reference_probability } => Some(reference_probability),
            SelectionResult::NoAlternative => None,
        };
        SelectionReport {
            trial_id,
            variable: variable.to_string(),
            result: result.label().to_string(),
            value: result.value(),
            predicted_probability,
            threshold: policy.threshold,
        }
    }
}

/// Grid and sampling settings for per-trial analyses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub points: usize,
    pub n_samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { points: crate::causation::DEFAULT_GRID_POINTS, n_samples: crate::intervention::DEFAULT_SAMPLES }
    }
}

/// Raising region for `variable` in `trial` along its designated path to
/// spillage.
pub fn region_for_trial(
    model: &TrainedModel,
    trial: &Trial,
    variable: &str,
    grid: &GridConfig,
    seed: u64,
) -> Result<AcRegion> {
    let query = AcQuery::new(model, variable, S, trial_context(trial))?;
    let (lo, hi) = model.graph().kind(variable)?.support().expect("continuous cause");
    let query = query.with_grid(crate::intervention::linspace(lo, hi, grid.points)).with_samples(grid.n_samples, seed);
    raising_region(model, &query)
}

pub fn select_for_trial(
    model: &TrainedModel,
    trial: &Trial,
    variable: &str,
    policy: &SelectionPolicy,
    grid: &GridConfig,
    seed: u64,
) -> Result<SelectionResult> {
    let region = region_for_trial(model, trial, variable, grid, seed)?;
    let actual = trial.get(variable).ok_or_else(|| Error::UnknownNode(variable.to_string()))?;
    select_alternative(&region, actual, policy)
}
