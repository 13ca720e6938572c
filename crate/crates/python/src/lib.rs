//! Python bindings for `momentum_qng`.
//!
//! Exposes problem instances, circuit evaluation, the Fubini-Study metric,
//! optimizer steps, seeded trials and sweeps. Vectors cross the boundary as
//! Python lists of floats.

use std::path::PathBuf;

use momentum_qng as core;
use momentum_qng::harness::{Aggregate, TrialRecord};
use momentum_qng::problems::{Graph, DEFAULT_MVC4_EDGES, DEFAULT_PENALTY, DEFAULT_VQE_LAYERS};
use momentum_qng::{ConvergenceSpec, MetricTensor, OptimizerConfig, OptimizerKind, SweepConfig};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        core::Error::Io(_) | core::Error::Csv(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_kind(name: &str) -> PyResult<OptimizerKind> {
    name.parse().map_err(to_py)
}

fn metric_from_rows(rows: Vec<Vec<f64>>, lam: f64) -> PyResult<MetricTensor> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("metric must be a square list of lists"));
    }
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    Ok(MetricTensor::from_metric(m).map_err(to_py)?.with_lambda(lam))
}

fn rows_of(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// A benchmark instance: diagonal Hamiltonian, ansatz circuit and exact
/// ground-state data.
#[pyclass(frozen, module = "momentum_qng_py")]
struct Problem {
    inner: core::ProblemInstance,
}

#[pymethods]
impl Problem {
    /// Seeded Ising spin-glass instance with a hardware-efficient RY/CNOT ansatz.
    #[staticmethod]
    #[pyo3(signature = (n_qubits, seed=17, layers=DEFAULT_VQE_LAYERS))]
    fn portfolio(n_qubits: usize, seed: u64, layers: usize) -> PyResult<Self> {
        let inner = core::build_portfolio(n_qubits, seed, layers).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Minimum vertex cover QAOA instance. `edges` defaults to the fixed
    /// 4-vertex graph.
    #[staticmethod]
    #[pyo3(signature = (edges=None, layers=4, penalty=DEFAULT_PENALTY))]
    fn mvc(edges: Option<Vec<(usize, usize)>>, layers: usize, penalty: f64) -> PyResult<Self> {
        let edges = edges.unwrap_or_else(|| DEFAULT_MVC4_EDGES.to_vec());
        let graph = Graph::from_edges(edges).map_err(to_py)?;
        let inner = core::build_mvc(&graph, layers, penalty).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    #[getter]
    fn ground_energy(&self) -> f64 {
        self.inner.ground_energy
    }

    #[getter]
    fn solution_states(&self) -> Vec<usize> {
        self.inner.solution_states.clone()
    }

    /// Diagonal of the Hamiltonian, indexed by computational basis state.
    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal().to_vec()
    }

    fn state(&self, params: Vec<f64>) -> PyResult<Vec<Complex64>> {
        let s = self.inner.circuit.evaluate(&params).map_err(to_py)?;
        Ok(s.into_amplitudes())
    }

    fn energy(&self, params: Vec<f64>) -> PyResult<f64> {
        let s = self.inner.circuit.evaluate(&params).map_err(to_py)?;
        Ok(self.inner.energy(&s))
    }

    /// Exact gradient of the energy.
    fn gradient(&self, params: Vec<f64>) -> PyResult<Vec<f64>> {
        let jac = self.inner.circuit.jacobian(&params).map_err(to_py)?;
        Ok(jac.energy_gradient(self.inner.diagonal()))
    }

    /// Fubini-Study metric g = Re G as a list of rows.
    fn metric(&self, params: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let jac = self.inner.circuit.jacobian(&params).map_err(to_py)?;
        let m = MetricTensor::from_jacobian(&jac).map_err(to_py)?;
        Ok(rows_of(&m.metric))
    }

    /// Probability mass on the exact ground states.
    fn quality(&self, params: Vec<f64>) -> PyResult<f64> {
        let s = self.inner.circuit.evaluate(&params).map_err(to_py)?;
        core::quality_ratio(&s, &self.inner.solution_states).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(kind='{}', n_qubits={}, n_params={}, ground_energy={})",
            self.inner.kind,
            self.inner.n_qubits(),
            self.inner.n_params(),
            self.inner.ground_energy
        )
    }
}

/// Stateful optimizer: qng, adam, momentum-qng or momentum.
#[pyclass(module = "momentum_qng_py")]
struct Optimizer {
    inner: core::Optimizer,
}

#[pymethods]
impl Optimizer {
    #[new]
    #[pyo3(signature = (kind, n_params, eta=0.1, rho=0.9, lam=core::metric::DEFAULT_LAMBDA))]
    fn new(kind: &str, n_params: usize, eta: f64, rho: f64, lam: f64) -> PyResult<Self> {
        let cfg = OptimizerConfig::new(parse_kind(kind)?)
            .with_eta(eta)
            .with_rho(rho)
            .with_lambda(lam);
        let inner = core::Optimizer::new(cfg, n_params).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Returns the displacement Δθ for this step. `metric` is required by
    /// the metric-based optimizers and ignored by the others.
    #[pyo3(signature = (grad, metric=None))]
    fn step(&mut self, grad: Vec<f64>, metric: Option<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
        let m = metric
            .map(|rows| metric_from_rows(rows, self.inner.config.lambda))
            .transpose()?;
        self.inner.step(&grad, m.as_ref()).map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.config.kind.to_string()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.state.step_count
    }
}

/// (γ, Δt) → (ρ, η).
#[pyfunction]
fn langevin_to_hyperparams(gamma: f64, dt: f64) -> PyResult<(f64, f64)> {
    let h = core::langevin_to_hyperparams(core::LangevinParams { gamma, dt }).map_err(to_py)?;
    Ok((h.rho, h.eta))
}

/// (ρ, η) → (γ, Δt).
#[pyfunction]
fn hyperparams_to_langevin(rho: f64, eta: f64) -> PyResult<(f64, f64)> {
    let p = core::hyperparams_to_langevin(rho, eta).map_err(to_py)?;
    Ok((p.gamma, p.dt))
}

/// Solves (g + λI)x = grad.
#[pyfunction]
#[pyo3(signature = (metric, grad, lam=core::metric::DEFAULT_LAMBDA))]
fn natural_direction(metric: Vec<Vec<f64>>, grad: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    core::natural_direction(&metric_from_rows(metric, lam)?, &grad).map_err(to_py)
}

#[pyfunction]
fn check_convergence(trace: Vec<f64>, digits: u32, patience: usize) -> bool {
    core::check_convergence(&trace, digits, patience)
}

/// Empirical CCDF as (value, fraction of samples ≥ value) pairs.
#[pyfunction]
fn ccdf(values: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    core::ccdf(&values).map_err(to_py)
}

fn record_dict<'py>(py: Python<'py>, r: &TrialRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("optimizer", r.optimizer.name())?;
    d.set_item("eta", r.eta)?;
    d.set_item("seed", r.seed)?;
    d.set_item("init_digest", &r.init_digest)?;
    d.set_item("steps_taken", r.steps_taken)?;
    d.set_item("converged", r.converged)?;
    d.set_item("diverged", r.diverged)?;
    d.set_item("final_energy", r.final_energy)?;
    d.set_item("delta_e", r.delta_e)?;
    d.set_item("quality", r.quality)?;
    d.set_item("energy_trace", r.energy_trace.clone())?;
    Ok(d)
}

fn aggregate_dict<'py>(py: Python<'py>, a: &Aggregate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("optimizer", a.optimizer.name())?;
    d.set_item("eta", a.eta)?;
    d.set_item("n_trials", a.n_trials)?;
    d.set_item("mean_delta_e", a.delta_e.mean)?;
    d.set_item("std_delta_e", a.delta_e.std)?;
    d.set_item("mean_steps", a.steps.mean)?;
    d.set_item("std_steps", a.steps.std)?;
    d.set_item("mean_quality", a.quality.map(|q| q.mean))?;
    d.set_item("std_quality", a.quality.map(|q| q.std))?;
    Ok(d)
}

/// One seeded trial; returns a dict mirroring a `trials.csv` row plus the
/// energy trace.
#[pyfunction]
#[pyo3(signature = (problem, optimizer, eta=0.1, seed=0, max_steps=200, digits=3, patience=1, rho=0.9, lam=core::metric::DEFAULT_LAMBDA))]
#[allow(clippy::too_many_arguments)]
fn run_trial<'py>(
    py: Python<'py>,
    problem: PyRef<'py, Problem>,
    optimizer: &str,
    eta: f64,
    seed: u64,
    max_steps: usize,
    digits: u32,
    patience: usize,
    rho: f64,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = OptimizerConfig::new(parse_kind(optimizer)?)
        .with_eta(eta)
        .with_rho(rho)
        .with_lambda(lam);
    let conv = ConvergenceSpec::new(digits, patience).map_err(to_py)?;
    let inner = &problem.inner;
    let r = py
        .detach(|| core::run_trial(inner, &cfg, max_steps, conv, seed))
        .map_err(to_py)?;
    record_dict(py, &r)
}

/// Learning-rate sweep. Returns the per-(optimizer, η) aggregates; when
/// `out_dir` is given, also writes the CSV tables and manifest there.
#[pyfunction]
#[pyo3(signature = (problem, etas, trials=200, max_steps=200, digits=3, patience=1, optimizers=None, seed=0, rho=0.9, lam=core::metric::DEFAULT_LAMBDA, out_dir=None))]
#[allow(clippy::too_many_arguments)]
fn run_sweep<'py>(
    py: Python<'py>,
    problem: PyRef<'py, Problem>,
    etas: Vec<f64>,
    trials: usize,
    max_steps: usize,
    digits: u32,
    patience: usize,
    optimizers: Option<Vec<String>>,
    seed: u64,
    rho: f64,
    lam: f64,
    out_dir: Option<PathBuf>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut sweep = SweepConfig::new(max_steps, ConvergenceSpec::new(digits, patience).map_err(to_py)?);
    sweep.eta_grid = etas;
    sweep.n_trials = trials;
    sweep.base_seed = seed;
    sweep.template = sweep.template.with_rho(rho).with_lambda(lam);
    if let Some(names) = optimizers {
        sweep.optimizers = names.iter().map(|n| parse_kind(n)).collect::<PyResult<_>>()?;
    }
    let inner = &problem.inner;
    let report = py
        .detach(|| -> core::Result<_> {
            let report = core::run_sweep(inner, &sweep)?;
            if let Some(dir) = &out_dir {
                core::report::write_results(&report, dir)?;
            }
            Ok(report)
        })
        .map_err(to_py)?;
    report.aggregates.iter().map(|a| aggregate_dict(py, a)).collect()
}

#[pymodule]
pub fn momentum_qng_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Optimizer>()?;
    m.add_function(wrap_pyfunction!(langevin_to_hyperparams, m)?)?;
    m.add_function(wrap_pyfunction!(hyperparams_to_langevin, m)?)?;
    m.add_function(wrap_pyfunction!(natural_direction, m)?)?;
    m.add_function(wrap_pyfunction!(check_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(ccdf, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("OPTIMIZERS", OptimizerKind::ALL.map(|k| k.name()).to_vec())?;
    m.add("DEFAULT_ETA_GRID", core::harness::DEFAULT_ETA_GRID.to_vec())?;
    Ok(())
}
