//! Python bindings for the simulator core.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use demsim_core::analytic::{self, HolParams};
use demsim_core::engine::{self, SeedLabels};
use demsim_core::sweep::{self, Scenario, SweepParams, TableId};
use demsim_core::{trace, AccessCategory, Error, PerAc, Scheduler};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Consistency(_) | Error::EmptyQueue(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn per_ac(v: &PerAc<f64>) -> BTreeMap<String, f64> {
    v.iter().map(|(ac, x)| (ac.to_string(), *x)).collect()
}

fn scheduler(s: &str) -> PyResult<Scheduler> {
    s.parse().map_err(to_py)
}

fn access_category(s: &str) -> PyResult<AccessCategory> {
    s.parse().map_err(to_py)
}

/// Blocking probability of one saturated FIFO queue.
#[pyfunction]
fn hol_blocking_probability(n_u: u32, n_s: u32) -> PyResult<f64> {
    Ok(analytic::hol_blocking_probability(HolParams::new(n_u, n_s).map_err(to_py)?))
}

#[pyfunction]
fn hol_curve(n_s: u32, n_u_max: u32) -> PyResult<Vec<(u32, f64)>> {
    analytic::hol_curve(n_s, n_u_max).map_err(to_py)
}

/// Returns `(estimate, std_error)`.
#[pyfunction]
fn hol_blocking_monte_carlo(n_u: u32, n_s: u32, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let p = HolParams::new(n_u, n_s).map_err(to_py)?;
    let mc = analytic::hol_blocking_monte_carlo(p, samples, seed).map_err(to_py)?;
    Ok((mc.estimate, mc.std_error))
}

#[pyfunction]
fn build_beta_distribution(n_users: u32, beta: f64) -> PyResult<Vec<f64>> {
    Ok(demsim_core::traffic::build_beta_distribution(n_users, beta)
        .map_err(to_py)?
        .weights()
        .to_vec())
}

#[pyfunction]
#[pyo3(signature = (master, scenario, scheduler_name, alpha_index, beta_index, run_index))]
fn derive_seed(
    master: u64,
    scenario: u64,
    scheduler_name: &str,
    alpha_index: u64,
    beta_index: u64,
    run_index: u64,
) -> PyResult<u64> {
    Ok(engine::derive_seed(
        master,
        SeedLabels {
            scenario,
            scheduler: scheduler(scheduler_name)?,
            alpha_index,
            beta_index,
            run_index,
        },
    ))
}

#[pyclass(name = "ScenarioConfig", from_py_object)]
#[derive(Clone)]
struct PyScenarioConfig {
    inner: demsim_core::ScenarioConfig,
}

#[pymethods]
impl PyScenarioConfig {
    #[new]
    #[pyo3(signature = (n_users, alpha=1.0, beta=None, n_streams=None, periods=500, runs=15, master_seed=0))]
    fn new(
        n_users: u32,
        alpha: f64,
        beta: Option<f64>,
        n_streams: Option<u32>,
        periods: u32,
        runs: u32,
        master_seed: u64,
    ) -> PyResult<Self> {
        let mut cfg = demsim_core::ScenarioConfig::new(n_users)
            .with_alpha(alpha)
            .with_periods(periods)
            .with_runs(runs)
            .with_seed(master_seed);
        if let Some(b) = beta {
            cfg = cfg.with_beta(b);
        }
        if let Some(s) = n_streams {
            cfg = cfg.with_streams(s);
        }
        Ok(PyScenarioConfig {
            inner: demsim_core::validate_config(cfg).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_users(&self) -> u32 {
        self.inner.n_users
    }
    #[getter]
    fn n_streams(&self) -> u32 {
        self.inner.n_streams
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn periods(&self) -> u32 {
        self.inner.periods
    }
    #[getter]
    fn runs(&self) -> u32 {
        self.inner.runs
    }
    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.master_seed
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ScenarioConfig(n_users={}, n_streams={}, alpha={}, beta={}, periods={}, runs={}, master_seed={})",
            c.n_users, c.n_streams, c.alpha, c.beta, c.periods, c.runs, c.master_seed
        )
    }
}

#[pyclass(name = "CounterStats", skip_from_py_object)]
struct PyCounterStats {
    inner: demsim_core::CounterStats,
}

#[pymethods]
impl PyCounterStats {
    #[getter]
    fn mean(&self) -> BTreeMap<String, f64> {
        per_ac(&self.inner.mean_c)
    }
    #[getter]
    fn stddev(&self) -> BTreeMap<String, f64> {
        per_ac(&self.inner.stddev_c)
    }
    #[getter]
    fn ci95(&self) -> BTreeMap<String, f64> {
        per_ac(&self.inner.ci95_c)
    }
    #[getter]
    fn runs(&self) -> u32 {
        self.inner.runs
    }
    #[getter]
    fn periods(&self) -> u32 {
        self.inner.periods
    }

    fn __repr__(&self) -> String {
        let m = &self.inner.mean_c;
        format!(
            "CounterStats(VO={:.4}, BE={:.4}, runs={})",
            m[AccessCategory::Voice],
            m[AccessCategory::BestEffort],
            self.inner.runs
        )
    }
}

/// Per-AC frames per period of one run.
#[pyfunction]
fn run_once(config: &PyScenarioConfig, scheduler_name: &str, seed: u64) -> PyResult<BTreeMap<String, f64>> {
    let c = engine::run_once(&config.inner, scheduler(scheduler_name)?, seed).map_err(to_py)?;
    Ok(per_ac(&c))
}

#[pyfunction]
fn run_replications(py: Python<'_>, config: &PyScenarioConfig, scheduler_name: &str) -> PyResult<PyCounterStats> {
    let s = scheduler(scheduler_name)?;
    let cfg = config.inner.clone();
    let inner = py.detach(move || engine::run_replications(&cfg, s)).map_err(to_py)?;
    Ok(PyCounterStats { inner })
}

#[pyfunction]
fn fifo_exact_expected(config: &PyScenarioConfig, horizon: u32) -> PyResult<BTreeMap<String, f64>> {
    Ok(per_ac(&engine::fifo_exact_expected(&config.inner, horizon).map_err(to_py)?))
}

#[pyclass(name = "SweepResult", skip_from_py_object)]
struct PySweepResult {
    inner: sweep::SweepResult,
}

fn table_id(which: &str) -> PyResult<TableId> {
    which.parse().map_err(to_py)
}

#[pymethods]
impl PySweepResult {
    #[getter]
    fn scenario(&self) -> String {
        self.inner.scenario.to_string()
    }
    #[getter]
    fn alpha_axis(&self) -> Vec<f64> {
        self.inner.axes.alpha.clone()
    }
    #[getter]
    fn beta_axis(&self) -> Vec<f64> {
        self.inner.axes.beta.clone()
    }
    #[getter]
    fn provenance(&self) -> String {
        self.inner.provenance.to_string()
    }

    /// CSV text of one table (`counters`, `t_change`, `t_avg_vs_beta`, ...).
    fn table_csv(&self, which: &str) -> PyResult<String> {
        Ok(sweep::emit_csv(&self.inner.table(table_id(which)?)))
    }

    fn table_json(&self, which: &str) -> PyResult<String> {
        Ok(sweep::emit_json(&self.inner.table(table_id(which)?)))
    }

    fn mean(&self, scheduler_name: &str, alpha_index: usize, beta_index: usize) -> PyResult<BTreeMap<String, f64>> {
        self.check_cell(alpha_index, beta_index)?;
        Ok(per_ac(&self.inner.stats(scheduler(scheduler_name)?, alpha_index, beta_index).mean_c))
    }

    /// Percent change of DEMS over 802.11ac; `inf` when the latter is zero.
    fn t_change(&self, ac: &str, alpha_index: usize, beta_index: usize) -> PyResult<f64> {
        self.check_cell(alpha_index, beta_index)?;
        Ok(self
            .inner
            .t_change(access_category(ac)?, alpha_index, beta_index)
            .finite()
            .unwrap_or(f64::INFINITY))
    }

    fn t_avg_vs_alpha(&self, scheduler_name: &str, ac: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.t_avg_vs_alpha(scheduler(scheduler_name)?, access_category(ac)?))
    }

    fn t_avg_vs_beta(&self, scheduler_name: &str, ac: &str) -> PyResult<Vec<f64>> {
        Ok(self.inner.t_avg_vs_beta(scheduler(scheduler_name)?, access_category(ac)?))
    }
}

impl PySweepResult {
    fn check_cell(&self, a: usize, b: usize) -> PyResult<()> {
        if a >= self.inner.n_alpha() || b >= self.inner.n_beta() {
            return Err(pyo3::exceptions::PyIndexError::new_err(format!("cell ({a}, {b}) outside grid")));
        }
        Ok(())
    }
}

#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (scenario, n_alpha=25, n_beta=25, periods=500, runs=15, master_seed=42, workers=None))]
fn run_sweep(
    py: Python<'_>,
    scenario: &str,
    n_alpha: usize,
    n_beta: usize,
    periods: u32,
    runs: u32,
    master_seed: u64,
    workers: Option<usize>,
) -> PyResult<PySweepResult> {
    let scenario: Scenario = scenario.parse().map_err(to_py)?;
    let params = SweepParams {
        n_alpha,
        n_beta,
        periods,
        runs,
        ..SweepParams::new(scenario, master_seed)
    };
    let inner = py
        .detach(move || sweep::run_sweep_with_workers(params, workers.or_else(sweep::workers_from_env)))
        .map_err(to_py)?;
    Ok(PySweepResult { inner })
}

#[pyclass(name = "Workload", skip_from_py_object)]
struct PyWorkload {
    inner: trace::Workload,
}

#[pymethods]
impl PyWorkload {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyWorkload {
            inner: trace::parse_workload(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_streams(&self) -> u32 {
        self.inner.n_streams
    }

    #[getter]
    fn n_users(&self) -> u32 {
        self.inner.n_users
    }

    fn replay(&self, scheduler_name: &str) -> PyResult<PyTimeline> {
        Ok(PyTimeline {
            inner: trace::replay(&self.inner, scheduler(scheduler_name)?),
        })
    }
}

#[pyclass(name = "Timeline", skip_from_py_object)]
struct PyTimeline {
    inner: trace::Timeline,
}

#[pymethods]
impl PyTimeline {
    fn render(&self) -> String {
        trace::render(&self.inner)
    }

    /// Summary as a dict: periods, airtime, padding_units, per-AC completion.
    fn stats(&self) -> BTreeMap<String, usize> {
        let s = trace::timeline_stats(&self.inner);
        let mut out = BTreeMap::from([
            ("periods".to_string(), s.periods),
            ("airtime".to_string(), s.airtime as usize),
            ("padding_units".to_string(), s.padding_units as usize),
            ("frames".to_string(), s.frames_per_txop.iter().sum()),
        ]);
        for (ac, k) in s.completion.iter() {
            out.insert(format!("{}_done", ac.as_str().to_ascii_lowercase()), *k);
        }
        out
    }

    fn summary(&self) -> String {
        trace::timeline_stats(&self.inner).to_string()
    }

    /// Placements as `(txop, stream, label, dest, start, duration)` tuples.
    fn placements(&self) -> Vec<(usize, usize, String, u32, u32, u32)> {
        let mut out = Vec::new();
        for (k, txop) in self.inner.txops.iter().enumerate() {
            for (s, lane) in txop.streams.iter().enumerate() {
                for p in lane {
                    out.push((k + 1, s + 1, p.label.clone(), p.frame.dest.index(), p.start, p.frame.duration));
                }
            }
        }
        out
    }
}

#[pymodule]
fn demsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hol_blocking_probability, m)?)?;
    m.add_function(wrap_pyfunction!(hol_curve, m)?)?;
    m.add_function(wrap_pyfunction!(hol_blocking_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(build_beta_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_once, m)?)?;
    m.add_function(wrap_pyfunction!(run_replications, m)?)?;
    m.add_function(wrap_pyfunction!(fifo_exact_expected, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_class::<PyScenarioConfig>()?;
    m.add_class::<PyCounterStats>()?;
    m.add_class::<PySweepResult>()?;
    m.add_class::<PyWorkload>()?;
    m.add_class::<PyTimeline>()?;
    m.add("RNG_NAME", engine::RNG_NAME)?;
    Ok(())
}
