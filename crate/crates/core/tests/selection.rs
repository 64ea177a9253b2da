use std::collections::BTreeMap;

use pourcause::causation::AcRegion;
use pourcause::evaluate::{confusion_matrix, evaluate, EvalConfig};
use pourcause::intervention::DoEstimate;
use pourcause::selection::{
    select_alternative, select_for_trial, Criterion, GridConfig, SelectionPolicy, SelectionReport, SelectionResult,
};
use pourcause::{pouring_graph, Error, InterventionSet, TrainedModel, Trial, WorldConfig};
use proptest::prelude::*;

fn est(p: f64) -> DoEstimate {
    DoEstimate { probability: p, std_error: 0.01, n_samples: 100, seed: 0 }
}

/// RD-style region with no mediators: raising wherever rhs < reference.
fn region(grid: Vec<f64>, rhs: Vec<f64>, reference: f64, actual: f64) -> AcRegion {
    let raising = rhs.iter().map(|&r| reference > r).collect();
    AcRegion {
        cause: "RD".into(),
        outcome: "S".into(),
        path: vec!["RD".into(), "S".into()],
        mediators: vec![],
        context: InterventionSet::new().with("RD", actual),
        actual,
        grid,
        rhs: rhs.into_iter().map(est).collect(),
        lhs: BTreeMap::from([("{}".to_string(), est(reference))]),
        raising,
    }
}

fn policy(threshold: f64, criterion: Criterion) -> SelectionPolicy {
    SelectionPolicy { threshold, criterion }
}

#[test]
fn closest_qualifying_value_wins() {
    let r = region(vec![0.5, 0.7, 0.9, 1.1, 1.3], vec![0.95, 0.9, 0.15, 0.05, 0.01], 0.9, 0.7);
    let got = select_alternative(&r, 0.7, &SelectionPolicy::new(0.2).unwrap()).unwrap();
    assert_eq!(got, SelectionResult::Alternative { value: 0.9, predicted_probability: 0.15 });
    let got = select_alternative(&r, 0.7, &SelectionPolicy::new(0.1).unwrap()).unwrap();
    assert_eq!(got.value(), Some(1.1));
    let got = select_alternative(&r, 0.7, &policy(0.2, Criterion::LowestProbability)).unwrap();
    assert_eq!(got.value(), Some(1.3));
}

#[test]
fn ties_go_to_the_smaller_value() {
    let r = region(vec![0.5, 0.7, 0.9], vec![0.05, 0.95, 0.05], 0.9, 0.7);
    assert_eq!(select_alternative(&r, 0.7, &SelectionPolicy::default()).unwrap().value(), Some(0.5));
    let r = region(vec![0.5, 0.7, 0.9], vec![0.05, 0.95, 0.05], 0.9, 0.7);
    assert_eq!(select_alternative(&r, 0.7, &policy(0.1, Criterion::LowestProbability)).unwrap().value(), Some(0.5));
}

#[test]
fn low_reference_needs_no_change() {
    let r = region(vec![0.5, 1.0], vec![0.02, 0.01], 0.05, 1.0);
    assert_eq!(
        select_alternative(&r, 1.0, &SelectionPolicy::new(0.1).unwrap()).unwrap(),
        SelectionResult::NoChangeNeeded { reference_probability: 0.05 }
    );
}

#[test]
fn high_everywhere_has_no_alternative() {
    let r = region(vec![0.5, 1.0, 1.5], vec![0.99, 0.9, 0.8], 0.95, 1.0);
    let got = select_alternative(&r, 1.0, &SelectionPolicy::new(0.2).unwrap()).unwrap();
    assert_eq!(got, SelectionResult::NoAlternative);
    assert_eq!(got.label(), "none");
    assert_eq!(got.value(), None);
}

#[test]
fn mismatched_regions_are_rejected() {
    let mut r = region(vec![0.5, 1.0], vec![0.5, 0.05], 0.9, 1.0);
    assert!(matches!(select_alternative(&r, 0.8, &SelectionPolicy::default()), Err(Error::GridMismatch(_))));
    r.rhs.pop();
    assert!(matches!(select_alternative(&r, 1.0, &SelectionPolicy::default()), Err(Error::GridMismatch(_))));
    assert!(SelectionPolicy::new(0.0).is_err());
    assert!(SelectionPolicy::new(1.0).is_err());
}

#[test]
fn report_json_shape() {
    let p = SelectionPolicy::default();
    let alt = SelectionResult::Alternative { value: 0.89, predicted_probability: 0.07 };
    let json = serde_json::to_value(SelectionReport::new(Some(4), "RD", &alt, &p)).unwrap();
    assert_eq!(
        json,
        serde_json::json!({"trial_id": 4, "variable": "RD", "result": "alternative", "value": 0.89,
                           "predicted_probability": 0.07, "threshold": 0.1})
    );
    let none = SelectionReport::new(None, "FU", &SelectionResult::NoAlternative, &p);
    assert_eq!(none.result, "none");
    assert_eq!(none.predicted_probability, None);
    let text = serde_json::to_string(&SelectionResult::NoChangeNeeded { reference_probability: 0.01 }).unwrap();
    assert_eq!(text, r#"{"result":"no_change_needed","reference_probability":0.01}"#);
}

fn region_strategy() -> impl Strategy<Value = (AcRegion, f64)> {
    (2usize..30, 0.0f64..1.0).prop_flat_map(|(n, reference)| {
        (proptest::collection::vec(0.0f64..1.0, n), 0..n).prop_map(move |(rhs, a)| {
            let grid: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 / (n - 1) as f64).collect();
            let actual = grid[a];
            (region(grid, rhs, reference, actual), actual)
        })
    })
}

proptest! {
    #[test]
    fn alternatives_raise_and_clear_the_threshold((r, actual) in region_strategy(), t in 0.01f64..0.99) {
        let p = SelectionPolicy::new(t).unwrap();
        if let SelectionResult::Alternative { value, predicted_probability } = select_alternative(&r, actual, &p).unwrap() {
            let i = r.grid.iter().position(|&g| g == value).unwrap();
            prop_assert!(r.raising[i]);
            prop_assert!(predicted_probability < t);
            prop_assert_eq!(predicted_probability, r.rhs[i].probability);
            for (j, g) in r.grid.iter().enumerate() {
                if r.raising[j] && r.rhs[j].probability < t {
                    prop_assert!((value - actual).abs() <= (g - actual).abs());
                }
            }
        }
    }

    #[test]
    fn larger_thresholds_keep_alternatives((r, actual) in region_strategy(), t in 0.01f64..0.5, dt in 0.0f64..0.49) {
        let small = select_alternative(&r, actual, &SelectionPolicy::new(t).unwrap()).unwrap();
        let large = select_alternative(&r, actual, &SelectionPolicy::new(t + dt).unwrap()).unwrap();
        if matches!(small, SelectionResult::Alternative { .. }) {
            prop_assert!(!matches!(large, SelectionResult::NoAlternative));
        }
    }
}

#[test]
fn trial_selection_runs_end_to_end() {
    let model = TrainedModel::initialized(&pouring_graph(), &[8], 3).unwrap();
    let trial = Trial { rc: 0.7, fu: 0.51, rd: 0.7, rv: 0.73, spillage: true };
    let grid = GridConfig { points: 11, n_samples: 50 };
    for var in ["RD", "FU", "RC"] {
        let a = select_for_trial(&model, &trial, var, &SelectionPolicy::default(), &grid, 9).unwrap();
        let b = select_for_trial(&model, &trial, var, &SelectionPolicy::default(), &grid, 9).unwrap();
        assert_eq!(a, b);
        if let Some(v) = a.value() {
            assert!(pourcause::pouring_graph().kind(var).unwrap().admits(v.into()));
        }
    }
}

#[test]
fn evaluation_rejects_empty_test_sets() {
    let model = TrainedModel::initialized(&pouring_graph(), &[4], 0).unwrap();
    assert!(matches!(confusion_matrix(&model, &[]), Err(Error::EmptyDataset)));
    assert!(matches!(evaluate(&model, &WorldConfig::default(), &[], &EvalConfig::default()), Err(Error::EmptyDataset)));
}

#[test]
fn small_evaluation_is_consistent() {
    let model = TrainedModel::initialized(&pouring_graph(), &[4], 1).unwrap();
    let world = WorldConfig::default();
    let trials = world.generate_dataset(40, 2);
    let config = EvalConfig {
        grid: GridConfig { points: 11, n_samples: 40 },
        histogram_trials: 5,
        seed: 4,
        ..EvalConfig::default()
    };
    let report = evaluate(&model, &world, &trials, &config).unwrap();
    let c = report.confusion;
    assert_eq!(c.true_positive + c.false_negative + c.true_negative + c.false_positive, 40);
    let spills = trials.iter().filter(|t| t.spillage).count();
    for v in &report.variables {
        assert_eq!(v.spillage_trials, spills);
        assert_eq!(v.trials.len(), spills);
        assert_eq!(v.histogram.len(), 11);
        assert_eq!(v.histogram.iter().sum::<usize>(), v.histogram_trials.len());
        assert!(v.histogram_trials.len() <= 5);
    }
    assert_eq!(report, evaluate(&model, &world, &trials, &config).unwrap());
}
