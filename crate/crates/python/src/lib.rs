use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use pourcause::dataset::{read_trials, write_trials};
use pourcause::discovery::{bootstrap, stable_edges, CiKind, CiTest, Tiers};
use pourcause::intervention::{conditional_probability, do_curve, interventional_probability, linspace};
use pourcause::nade::TrainConfig;
use pourcause::selection::{region_for_trial, select_alternative, GridConfig, SelectionPolicy, SelectionReport};
use pourcause::{Dataset, InterventionSet, Value};

fn err(e: pourcause::Error) -> PyErr {
    if e.exit_code() == 2 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value as J;
    match v {
        J::Null => Ok(py.None().into_bound(py)),
        J::Bool(b) => b.into_bound_py_any(py),
        J::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py),
        },
        J::String(s) => s.into_bound_py_any(py),
        J::Array(a) => {
            let list = PyList::empty(py);
            for x in a {
                list.append(json_to_py(py, x)?)?;
            }
            Ok(list.into_any())
        }
        J::Object(m) => {
            let dict = PyDict::new(py);
            for (k, x) in m {
                dict.set_item(k, json_to_py(py, x)?)?;
            }
            Ok(dict.into_any())
        }
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let j = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json_to_py(py, &j)
}

/// One pouring trial.
#[pyclass(module = "pourcause_py", get_all, set_all, from_py_object)]
#[derive(Clone, Copy)]
struct Trial {
    rc: f64,
    fu: f64,
    rd: f64,
    rv: f64,
    spillage: bool,
}

#[pymethods]
impl Trial {
    #[new]
    #[pyo3(signature = (rc, fu, rd, rv, spillage = true))]
    fn new(rc: f64, fu: f64, rd: f64, rv: f64, spillage: bool) -> Self {
        Trial { rc, fu, rd, rv, spillage }
    }

    fn __repr__(&self) -> String {
        let s = if self.spillage { "True" } else { "False" };
        format!("Trial(rc={}, fu={}, rd={}, rv={}, spillage={s})", self.rc, self.fu, self.rd, self.rv)
    }
}

impl From<Trial> for pourcause::Trial {
    fn from(t: Trial) -> Self {
        pourcause::Trial { rc: t.rc, fu: t.fu, rd: t.rd, rv: t.rv, spillage: t.spillage }
    }
}

impl From<pourcause::Trial> for Trial {
    fn from(t: pourcause::Trial) -> Self {
        Trial { rc: t.rc, fu: t.fu, rd: t.rd, rv: t.rv, spillage: t.spillage }
    }
}

fn core_trials(trials: &[Trial]) -> Vec<pourcause::Trial> {
    trials.iter().map(|&t| t.into()).collect()
}

/// Synthetic pouring world with its default calibration.
#[pyclass(module = "pourcause_py")]
struct World(pourcause::WorldConfig);

#[pymethods]
impl World {
    #[new]
    fn new() -> Self {
        World(pourcause::WorldConfig::default())
    }

    fn simulate(&self, n: usize, seed: u64) -> Vec<Trial> {
        self.0.generate_dataset(n, seed).into_iter().map(Trial::from).collect()
    }

    fn spill_probability(&self, fu: f64, rd: f64, rv: f64) -> f64 {
        self.0.spill_probability(fu, rd, rv)
    }

    /// Successes out of `replications` after overriding `variable` with `value`.
    fn replay(&self, trial: Trial, variable: &str, value: f64, replications: usize, seed: u64) -> PyResult<usize> {
        let o = pourcause::world::Overrides::single(variable, value).map_err(err)?;
        Ok(self.0.replay(&trial.into(), &o, replications, seed))
    }
}

#[pyfunction]
fn save_trials(path: PathBuf, trials: Vec<Trial>) -> PyResult<()> {
    write_trials(&path, &core_trials(&trials)).map_err(err)
}

#[pyfunction]
fn load_trials(path: PathBuf) -> PyResult<Vec<Trial>> {
    Ok(read_trials(&path).map_err(err)?.into_iter().map(Trial::from).collect())
}

fn interventions(model: &pourcause::TrainedModel, values: Option<&Bound<'_, PyDict>>) -> PyResult<InterventionSet> {
    let mut set = InterventionSet::new();
    let Some(values) = values else { return Ok(set) };
    for (k, v) in values.iter() {
        let name: String = k.extract()?;
        let binary = model.graph().kind(&name).map_err(err)?.is_binary();
        let value = if binary { Value::Bool(v.extract()?) } else { Value::Real(v.extract()?) };
        set.set(&name, value);
    }
    Ok(set)
}

/// Learned causal mechanisms for the pouring graph.
#[pyclass(module = "pourcause_py")]
struct Model(pourcause::TrainedModel);

#[pymethods]
impl Model {
    #[staticmethod]
    #[pyo3(signature = (trials, epochs = 300, seed = 0, hidden = vec![16, 16]))]
    fn train(trials: Vec<Trial>, epochs: usize, seed: u64, hidden: Vec<usize>) -> PyResult<Self> {
        let data = Dataset::from_trials(&core_trials(&trials));
        let config = TrainConfig { epochs, seed, hidden, ..TrainConfig::default() };
        let graph = pourcause::pouring_graph();
        Ok(Model(pourcause::TrainedModel::train(&graph, &data, &config).map_err(err)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model(pourcause::TrainedModel::load(&path).map_err(err)?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(&path).map_err(err)
    }

    fn nodes(&self) -> Vec<String> {
        self.0.graph().node_names().map(String::from).collect()
    }

    fn edges(&self) -> Vec<(String, String)> {
        self.0.graph().edges().to_vec()
    }

    /// `(probability, std_error)` of `outcome` under `do(values)`.
    #[pyo3(signature = (outcome, values = None, n_samples = 10_000, seed = 0))]
    fn interventional(
        &self,
        outcome: &str,
        values: Option<&Bound<'_, PyDict>>,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let set = interventions(&self.0, values)?;
        let e = interventional_probability(&self.0, outcome, &set, n_samples, seed).map_err(err)?;
        Ok((e.probability, e.std_error))
    }

    #[pyo3(signature = (outcome, values))]
    fn conditional(&self, outcome: &str, values: &Bound<'_, PyDict>) -> PyResult<f64> {
        conditional_probability(&self.0, outcome, &interventions(&self.0, Some(values))?).map_err(err)
    }

    /// List of `(value, probability, std_error)` over an evenly spaced grid.
    #[pyo3(signature = (variable, lo, hi, points, outcome = "S", fixed = None, n_samples = 10_000, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn do_curve(
        &self,
        variable: &str,
        lo: f64,
        hi: f64,
        points: usize,
        outcome: &str,
        fixed: Option<&Bound<'_, PyDict>>,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Vec<(f64, f64, f64)>> {
        let set = interventions(&self.0, fixed)?;
        let curve =
            do_curve(&self.0, outcome, variable, &linspace(lo, hi, points), &set, n_samples, seed).map_err(err)?;
        Ok(curve.into_iter().map(|(x, e)| (x, e.probability, e.std_error)).collect())
    }

    /// Raising region for `cause` in `trial`, as a dict.
    #[pyo3(signature = (trial, cause, grid_points = 101, n_samples = 10_000, seed = 0))]
    fn raising_region<'py>(
        &self,
        py: Python<'py>,
        trial: Trial,
        cause: &str,
        grid_points: usize,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let grid = GridConfig { points: grid_points, n_samples };
        let region = region_for_trial(&self.0, &trial.into(), cause, &grid, seed).map_err(err)?;
        to_py(py, &region)
    }

    /// Alternative value for `cause`, as a selection report dict.
    #[pyo3(signature = (trial, cause, threshold = 0.1, grid_points = 101, n_samples = 10_000, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn select<'py>(
        &self,
        py: Python<'py>,
        trial: Trial,
        cause: &str,
        threshold: f64,
        grid_points: usize,
        n_samples: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let policy = SelectionPolicy::new(threshold).map_err(err)?;
        let grid = GridConfig { points: grid_points, n_samples };
        let region = region_for_trial(&self.0, &trial.into(), cause, &grid, seed).map_err(err)?;
        let result = select_alternative(&region, region.actual, &policy).map_err(err)?;
        to_py(py, &SelectionReport::new(None, cause, &result, &policy))
    }
}

/// Bootstrapped PC on pouring trials: `(stable_edges, frequency_rows)`.
#[pyfunction]
#[pyo3(signature = (trials, n_boot = 1000, alpha = 0.05, threshold = 0.5, seed = 0))]
fn discover<'py>(
    py: Python<'py>,
    trials: Vec<Trial>,
    n_boot: usize,
    alpha: f64,
    threshold: f64,
    seed: u64,
) -> PyResult<(Vec<(String, String)>, Bound<'py, PyAny>)> {
    let data = Dataset::from_trials(&core_trials(&trials));
    let tiers = Tiers::pouring();
    let test = CiTest::new(CiKind::FisherZ, alpha).map_err(err)?;
    let table = bootstrap(&data, n_boot, &test, &tiers, seed).map_err(err)?;
    let edges = stable_edges(&table, threshold, &tiers).map_err(err)?;
    let rows = PyDict::new(py);
    for ((a, b), f) in &table.rows {
        rows.set_item((a, b), to_py(py, f)?)?;
    }
    Ok((edges, rows.into_any()))
}

#[pymodule]
fn pourcause_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Trial>()?;
    m.add_class::<World>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(save_trials, m)?)?;
    m.add_function(wrap_pyfunction!(load_trials, m)?)?;
    m.add_function(wrap_pyfunction!(discover, m)?)?;
    Ok(())
}
