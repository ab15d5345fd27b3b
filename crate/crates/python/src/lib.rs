//! Python bindings: intervals, networks, star sets, plant steps and the
//! scenario-level reachability entry points.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use reach_core::config::Config;
use reach_core::dynamics::{self, BrakeParams, TaxiParams};
use reach_core::geometry::StarSet;
use reach_core::grid::CellSet;
use reach_core::interval::{Interval, IntervalBox};
use reach_core::network::Network;
use reach_core::propagation;
use reach_core::reach::{self, Engine, ReachResult, RunEnd, Scenario};
use reach_core::scenario_gen::network_hash;
use reach_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::PoleCrossed { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_box(bounds: &[(f64, f64)]) -> PyResult<IntervalBox> {
    let dims = bounds.iter().map(|&(lo, hi)| Interval::try_new(lo, hi)).collect::<Result<Vec<_>, _>>();
    Ok(IntervalBox::new(dims.map_err(py_err)?))
}

fn from_box(b: &IntervalBox) -> Vec<(f64, f64)> {
    b.iter().map(|iv| (iv.lo, iv.hi)).collect()
}

fn parse_engine(name: &str) -> PyResult<Engine> {
    match name {
        "baseline" => Ok(Engine::Baseline),
        "ibp_composed" => Ok(Engine::IbpComposed),
        "star_composed" => Ok(Engine::StarComposed),
        _ => Err(PyValueError::new_err(format!("unknown engine {name:?}"))),
    }
}

fn engine_name(e: Engine) -> &'static str {
    match e {
        Engine::Baseline => "baseline",
        Engine::IbpComposed => "ibp_composed",
        Engine::StarComposed => "star_composed",
    }
}

/// Closed interval `[lo, hi]` with outward-sound elementary functions.
#[pyclass(name = "Interval", frozen)]
struct PyInterval(Interval);

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lo: f64, hi: f64) -> PyResult<Self> {
        Interval::try_new(lo, hi).map(Self).map_err(py_err)
    }

    #[getter]
    fn lo(&self) -> f64 {
        self.0.lo
    }

    #[getter]
    fn hi(&self) -> f64 {
        self.0.hi
    }

    fn width(&self) -> f64 {
        self.0.width()
    }

    fn mid(&self) -> f64 {
        self.0.mid()
    }

    fn contains(&self, x: f64) -> bool {
        self.0.contains(x)
    }

    fn relu(&self) -> Self {
        Self(self.0.relu())
    }

    fn sin(&self) -> Self {
        Self(self.0.sin())
    }

    fn cos(&self) -> Self {
        Self(self.0.cos())
    }

    /// Raises `ArithmeticError` if the interval contains a pole.
    fn tan(&self) -> PyResult<Self> {
        self.0.tan().map(Self).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.0.lo, self.0.hi)
    }
}

/// Star set `{c + V a : C a <= d, a in latent box}`.
#[pyclass(name = "StarSet", frozen)]
struct PyStarSet(StarSet);

#[pymethods]
impl PyStarSet {
    #[staticmethod]
    fn from_box(bounds: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self(StarSet::from_box(&to_box(&bounds)?)))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn latent_dim(&self) -> usize {
        self.0.latent_dim()
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.0.num_constraints()
    }

    fn point_at(&self, alpha: Vec<f64>) -> PyResult<Vec<f64>> {
        if alpha.len() != self.0.latent_dim() {
            return Err(PyValueError::new_err(format!("expected {} latent coordinates", self.0.latent_dim())));
        }
        Ok(self.0.point_at(&alpha))
    }

    fn is_feasible(&self) -> PyResult<bool> {
        self.0.is_feasible().map_err(py_err)
    }

    /// Tight per-dimension bounds, one LP pair per dimension.
    fn box_bounds(&self) -> PyResult<Vec<(f64, f64)>> {
        self.0.box_bounds().map(|b| from_box(&b)).map_err(py_err)
    }

    #[pyo3(signature = (x, tol = 1e-9))]
    fn contains_point(&self, x: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.0.contains_point(&x, tol).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("StarSet(dim={}, latent_dim={}, constraints={})", self.0.dim(), self.0.latent_dim(), self.0.num_constraints())
    }
}

/// Feed-forward ReLU network.
#[pyclass(name = "Network", frozen)]
struct PyNetwork(Network);

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Network::from_json_str(text).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Network::load(path).map(Self).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn in_dim(&self) -> usize {
        self.0.in_dim()
    }

    #[getter]
    fn out_dim(&self) -> usize {
        self.0.out_dim()
    }

    /// SHA-256 of the canonical JSON form.
    fn hash(&self) -> String {
        network_hash(&self.0)
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.eval(&x).map_err(py_err)
    }

    /// Interval bound propagation over an input box.
    fn ibp(&self, bounds: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
        propagation::ibp(&self.0, &to_box(&bounds)?).map(|b| from_box(&b)).map_err(py_err)
    }

    /// Exact output set over an input star, as a list of leaf stars.
    #[pyo3(signature = (input, split_cap = 4096))]
    fn exact_star(&self, input: PyRef<'_, PyStarSet>, split_cap: usize) -> PyResult<Vec<PyStarSet>> {
        let union = propagation::exact_star(&self.0, &input.0, split_cap).map_err(py_err)?;
        Ok(union.iter().cloned().map(PyStarSet).collect())
    }
}

/// Outcome of a forward run.
#[pyclass(name = "ReachResult", frozen)]
struct PyReachResult {
    result: ReachResult,
    cells: Vec<Vec<usize>>,
    json: String,
}

#[pymethods]
impl PyReachResult {
    #[getter]
    fn is_safe(&self) -> bool {
        self.result.is_safe
    }

    #[getter]
    fn converged_at(&self) -> Option<usize> {
        self.result.converged_at
    }

    /// Index tuples of every cell reached at some step.
    #[getter]
    fn global_cells(&self) -> Vec<Vec<usize>> {
        self.cells.clone()
    }

    #[getter]
    fn per_step_counts(&self) -> Vec<usize> {
        self.result.per_step.iter().map(CellSet::len).collect()
    }

    #[getter]
    fn degraded_count(&self) -> usize {
        self.result.degraded.len()
    }

    #[getter]
    fn unverifiable_count(&self) -> usize {
        self.result.unverifiable.len()
    }

    /// Same document the CLI writes.
    fn to_json(&self) -> String {
        self.json.clone()
    }
}

/// A loaded scenario: plant, controller, grid and analysis settings.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    sc: Scenario,
    r0: Option<IntervalBox>,
}

impl PyScenario {
    fn cells(&self, set: &CellSet) -> Vec<Vec<usize>> {
        self.sc.grid.index_tuples(&set.resized(self.sc.grid.total()))
    }
}

#[pymethods]
impl PyScenario {
    /// Loads a scenario JSON file; network paths resolve relative to it.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let loaded = Config::load(&path).map_err(py_err)?;
        Ok(Self { sc: loaded.scenario, r0: loaded.r0 })
    }

    /// Copy with another engine and horizon `m`.
    fn variant(&self, engine: &str, m: usize) -> PyResult<Self> {
        let sc = self.sc.variant(parse_engine(engine)?, m);
        sc.validate().map_err(py_err)?;
        Ok(Self { sc, r0: self.r0.clone() })
    }

    #[getter]
    fn engine(&self) -> &'static str {
        engine_name(self.sc.engine)
    }

    #[getter]
    fn m(&self) -> usize {
        self.sc.m
    }

    #[getter]
    fn grid_counts(&self) -> Vec<usize> {
        self.sc.grid.counts().to_vec()
    }

    #[getter]
    fn dim_names(&self) -> Vec<String> {
        self.sc.plant.dim_names()
    }

    #[getter]
    fn r0(&self) -> Option<Vec<(f64, f64)>> {
        self.r0.as_ref().map(from_box)
    }

    #[getter]
    fn network(&self) -> PyNetwork {
        PyNetwork(self.sc.network.clone())
    }

    /// Grid cell containing state `x`.
    fn cell_of(&self, x: Vec<f64>) -> PyResult<Vec<usize>> {
        self.sc.grid.cell_of(&x).map_err(py_err)
    }

    fn cell_bounds(&self, idx: Vec<usize>) -> PyResult<Vec<(f64, f64)>> {
        let ok = idx.len() == self.sc.grid.dim() && idx.iter().zip(self.sc.grid.counts()).all(|(i, n)| i < n);
        if !ok {
            return Err(PyValueError::new_err(format!("cell index {idx:?} is outside the grid")));
        }
        Ok(from_box(&self.sc.grid.cell_box(&idx)))
    }

    /// Forward reachability from `r0`, or from the scenario's own r0.
    #[pyo3(signature = (r0 = None))]
    fn forward(&self, py: Python<'_>, r0: Option<Vec<(f64, f64)>>) -> PyResult<PyReachResult> {
        let r0 = match (r0, &self.r0) {
            (Some(b), _) => to_box(&b)?,
            (None, Some(b)) => b.clone(),
            (None, None) => return Err(PyValueError::new_err("scenario has no r0; pass one")),
        };
        let result = py.detach(|| reach::forward_reach(&self.sc, &r0)).map_err(py_err)?;
        let cells = self.cells(&result.global);
        let json = result.to_json(&self.sc.grid).to_string();
        Ok(PyReachResult { result, cells, json })
    }

    /// Backward analysis: `(unsafe_cells, safe_cells)` as index tuples.
    fn backward(&self, py: Python<'_>) -> PyResult<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
        let unsafe_set = py.detach(|| {
            let maps = reach::build_transition_maps(&self.sc)?;
            Ok(reach::backward_reach(&self.sc, &maps))
        });
        let unsafe_set = unsafe_set.map_err(py_err)?;
        let safe = reach::safe_cells(&self.sc, &unsafe_set);
        Ok((self.cells(&unsafe_set), self.cells(&safe)))
    }

    /// Cells from which some random run hits the unsafe set.
    fn simulate(&self, py: Python<'_>, runs_per_cell: usize, horizon: usize) -> Vec<Vec<usize>> {
        let flagged = py.detach(|| reach::simulate_cells(&self.sc, runs_per_cell, horizon));
        self.cells(&flagged)
    }

    /// One closed-loop run: `(states, end)` where `end` names why it stopped.
    #[pyo3(signature = (x0, horizon, seed = 0))]
    fn simulate_run(&self, x0: Vec<f64>, horizon: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, String)> {
        if x0.len() != self.sc.grid.dim() {
            return Err(PyValueError::new_err(format!("expected a state of dimension {}", self.sc.grid.dim())));
        }
        let mut rng = reach::cell_rng(seed, 0);
        let (traj, end) = reach::simulate_run(&self.sc, &x0, horizon, &mut rng);
        let end = match end {
            RunEnd::Horizon => "horizon",
            RunEnd::Unsafe => "unsafe",
            RunEnd::Left(_) => "left",
            RunEnd::Stopped => "stopped",
            RunEnd::Pole => "pole",
        };
        Ok((traj, end.to_string()))
    }
}

/// One taxi period `(p, theta) -> (p', theta')` under steering `phi` (rad).
#[pyfunction]
#[pyo3(signature = (p, theta, phi, v = 5.0, wheelbase = 5.0, dt = 0.05, substeps = 20))]
fn taxi_step(p: f64, theta: f64, phi: f64, v: f64, wheelbase: f64, dt: f64, substeps: usize) -> PyResult<(f64, f64)> {
    let params = TaxiParams { v, wheelbase, dt, substeps };
    params.validate().map_err(py_err)?;
    let [p, t] = dynamics::taxi_step([p, theta], phi, &params).map_err(py_err)?;
    Ok((p, t))
}

/// One braking period `(d, v) -> (d', v')` under command `u`.
#[pyfunction]
#[pyo3(signature = (d, v, u, dt = 0.05, substeps = 1))]
fn brake_step(d: f64, v: f64, u: f64, dt: f64, substeps: usize) -> PyResult<(f64, f64)> {
    let params = BrakeParams { dt, substeps };
    params.validate().map_err(py_err)?;
    let [d, v] = dynamics::brake_step([d, v], u, &params);
    Ok((d, v))
}

/// Proportional taxi controller on estimated `(p, theta)`; radians out.
#[pyfunction]
fn taxi_control(p_hat: f64, theta_hat: f64) -> f64 {
    dynamics::taxi_control(p_hat, theta_hat)
}

#[pymodule]
fn nncs_reach(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<PyStarSet>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyReachResult>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(taxi_step, m)?)?;
    m.add_function(wrap_pyfunction!(brake_step, m)?)?;
    m.add_function(wrap_pyfunction!(taxi_control, m)?)?;
    Ok(())
}
