//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists built from the core types' JSON form.

use std::io::BufReader;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use rads_core::acquisition::{self, UtilityParams};
use rads_core::corpusgap::{self, KlConfig};
use rads_core::harness::{self, HarnessConfig, Scenario};
use rads_core::rlsampler::SamplerConfig;
use rads_core::selection::{select_with_policy, Policy};
use rads_core::signals::{self, PriorEstimate, ScoreEntry, ScorePool};
use rads_core::RadsError;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: RadsError) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_json<T: DeserializeOwned + Default>(text: Option<&str>, what: &str) -> PyResult<T> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|e| PyValueError::new_err(format!("{what}: {e}"))),
    }
}

fn pool_of(entries: Vec<(String, Vec<Vec<f64>>)>) -> PyResult<ScorePool> {
    ScorePool::new(
        entries
            .into_iter()
            .map(|(id, probs)| ScoreEntry { id, probs })
            .collect(),
    )
    .map_err(err)
}

fn policy_of(name: &str) -> PyResult<Policy> {
    name.parse().map_err(err)
}

/// Reads and validates a JSON-lines score file; returns `[(id, probs), ...]`.
#[pyfunction]
fn load_scores(path: PathBuf) -> PyResult<Vec<(String, Vec<Vec<f64>>)>> {
    let file = std::fs::File::open(&path).map_err(|e| PyValueError::new_err(format!("{}: {e}", path.display())))?;
    let pool = ScorePool::read_jsonl(BufReader::new(file)).map_err(err)?;
    signals::build_signals(&pool).map_err(err)?;
    Ok(pool.entries().iter().map(|e| (e.id.clone(), e.probs.clone())).collect())
}

/// Writes `[(id, probs), ...]` as a JSON-lines score file.
#[pyfunction]
fn save_scores(path: PathBuf, entries: Vec<(String, Vec<Vec<f64>>)>) -> PyResult<()> {
    let pool = pool_of(entries)?;
    let file = std::fs::File::create(&path).map_err(|e| PyRuntimeError::new_err(format!("{}: {e}", path.display())))?;
    pool.write_jsonl(std::io::BufWriter::new(file)).map_err(err)
}

/// Per-sample signals (p_bar, l_bar, pe, ee, mi, mi_norm, pseudo_label).
#[pyfunction]
fn build_signals<'py>(py: Python<'py>, entries: Vec<(String, Vec<Vec<f64>>)>) -> PyResult<Bound<'py, PyAny>> {
    let records = signals::build_signals(&pool_of(entries)?).map_err(err)?;
    to_py(py, &records)
}

/// `(w_plus, w_minus)` for an estimated positive prior.
#[pyfunction]
#[pyo3(signature = (pi_plus, rho = 0.9, clip_lo = 0.01))]
fn class_weights(pi_plus: f64, rho: f64, clip_lo: f64) -> PyResult<(f64, f64)> {
    if !(0.0..=1.0).contains(&pi_plus) {
        return Err(PyValueError::new_err(format!(
            "pi_plus must lie in [0, 1], got {pi_plus}"
        )));
    }
    let params = UtilityParams::new(rho, clip_lo).map_err(err)?;
    let prior = PriorEstimate {
        pi_plus,
        pi_minus: 1.0 - pi_plus,
        n_pool: 0,
    };
    let w = acquisition::class_weights(&prior, &params);
    Ok((w.w_plus, w.w_minus))
}

/// Selects up to `budget` ids with one policy. `sampler` is an optional JSON
/// object overriding the sampler defaults.
#[pyfunction]
#[pyo3(signature = (entries, policy, budget, seed = 0, sampler = None))]
fn select<'py>(
    py: Python<'py>,
    entries: Vec<(String, Vec<Vec<f64>>)>,
    policy: &str,
    budget: usize,
    seed: u64,
    sampler: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = policy_of(policy)?;
    let cfg: SamplerConfig = from_json(sampler, "sampler")?;
    let records = signals::build_signals(&pool_of(entries)?).map_err(err)?;
    let result = py
        .detach(|| select_with_policy(policy, &records, &cfg, budget, seed))
        .map_err(err)?;
    to_py(py, &result)
}

/// One synthetic transfer run. `scenario` and `harness` are optional JSON
/// objects overriding the defaults.
#[pyfunction]
#[pyo3(signature = (policy, budget, seed = 0, scenario = None, harness = None))]
fn run_transfer<'py>(
    py: Python<'py>,
    policy: &str,
    budget: usize,
    seed: u64,
    scenario: Option<&str>,
    harness: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = policy_of(policy)?;
    let scenario: Scenario = from_json(scenario, "scenario")?;
    let cfg: HarnessConfig = from_json(harness, "harness")?;
    let report = py
        .detach(|| {
            let domains = scenario.generate()?;
            cfg.validate("harness")?;
            harness::run_transfer(&domains, policy, budget, &cfg, seed)
        })
        .map_err(err)?;
    to_py(py, &report)
}

/// Budget sweep; returns `{"reports": [...], "summary": [...]}`.
#[pyfunction]
#[pyo3(signature = (policy, budgets, seeds, scenario = None, harness = None))]
fn sweep<'py>(
    py: Python<'py>,
    policy: &str,
    budgets: Vec<usize>,
    seeds: Vec<u64>,
    scenario: Option<&str>,
    harness: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let policy = policy_of(policy)?;
    let scenario: Scenario = from_json(scenario, "scenario")?;
    let cfg: HarnessConfig = from_json(harness, "harness")?;
    let reports = py
        .detach(|| harness::sweep(&scenario.generate()?, policy, &budgets, &seeds, &cfg))
        .map_err(err)?;
    let summary = harness::summarize(&reports);
    to_py(py, &serde_json::json!({ "reports": reports, "summary": summary }))
}

/// Coverage, Jaccard, smoothed KL and TF-IDF profiles of two corpora.
#[pyfunction]
#[pyo3(signature = (a, b, max_n = 2, epsilon = 1e-9, top_k = 20))]
fn corpus_gap<'py>(
    py: Python<'py>,
    a: Vec<String>,
    b: Vec<String>,
    max_n: usize,
    epsilon: f64,
    top_k: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let report = corpusgap::compare(&a, &b, max_n, &KlConfig { epsilon }, top_k).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn rads(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(load_scores, m)?)?;
    m.add_function(wrap_pyfunction!(save_scores, m)?)?;
    m.add_function(wrap_pyfunction!(build_signals, m)?)?;
    m.add_function(wrap_pyfunction!(class_weights, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(run_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_gap, m)?)?;
    m.add(
        "POLICIES",
        ["rads", "random", "uncertainty", "mi_only", "greedy_utility"],
    )?;
    Ok(())
}
