//! Python bindings. Fields cross the boundary as flat row-major lists of
//! length `N*N` (index `iy*N + ix`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ptlab_core as core;
use ptlab_core::{
    ExperimentConfig, Forcing, GridSpec, LabError, ObstacleMask, Problem, RunOptions, ScalarField,
    SolverSettings, TimeSettings, VectorField,
};

fn to_py(e: LabError) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn settings(eta: f64, cg_tol: f64, cg_max_iter: usize) -> SolverSettings {
    SolverSettings {
        eta,
        cg_tol,
        cg_max_iter,
        ..SolverSettings::default()
    }
}

fn scalar(g: GridSpec, v: Vec<f64>) -> PyResult<ScalarField> {
    ScalarField::new(g, v).map_err(to_py)
}

fn vector(g: GridSpec, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<VectorField> {
    VectorField::new(scalar(g, u1)?, scalar(g, u2)?).map_err(to_py)
}

fn split(v: &VectorField) -> (Vec<f64>, Vec<f64>) {
    let [a, b] = v.components();
    (a.values().to_vec(), b.values().to_vec())
}

/// Uniform periodic grid on `(-L, L)^2`.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(GridSpec);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(half_width: f64, n: usize) -> PyResult<Self> {
        core::build_grid(half_width, n).map(PyGrid).map_err(to_py)
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    #[getter]
    fn obstacle_limit(&self) -> f64 {
        self.0.obstacle_limit()
    }

    fn coords(&self) -> Vec<f64> {
        self.0.coords()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(L={}, N={})", self.0.half_width(), self.0.n())
    }
}

/// Nodes strictly inside the disc `B(0, r)`.
#[pyclass(name = "Mask", frozen)]
struct PyMask(ObstacleMask);

#[pymethods]
impl PyMask {
    #[new]
    fn new(grid: &PyGrid, radius: f64) -> PyResult<Self> {
        core::build_obstacle_mask(&grid.0, radius).map(PyMask).map_err(to_py)
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius()
    }

    #[getter]
    fn area(&self) -> f64 {
        self.0.area()
    }

    #[getter]
    fn masked_count(&self) -> usize {
        self.0.masked_count()
    }

    fn chi(&self) -> Vec<bool> {
        self.0.chi().to_vec()
    }
}

#[pyfunction]
#[pyo3(signature = (grid, mask, f, eta=1e-6, cg_tol=1e-10, cg_max_iter=20_000))]
fn solve_poisson<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    mask: &PyMask,
    f: Vec<f64>,
    eta: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let f = scalar(grid.0, f)?;
    let s = settings(eta, cg_tol, cg_max_iter);
    let sol = py
        .detach(|| core::solve_poisson_obstacle(&f, &grid.0, &mask.0, &s))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("u", sol.u.values().to_vec())?;
    d.set_item("mean", sol.mean)?;
    d.set_item("grad_norm", sol.grad_norm)?;
    d.set_item("residual", sol.residual)?;
    d.set_item("iterations", sol.iterations)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (grid, mask, f1, f2, eta=1e-6, cg_tol=1e-10, cg_max_iter=20_000))]
#[allow(clippy::too_many_arguments)]
fn solve_stokes<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    mask: &PyMask,
    f1: Vec<f64>,
    f2: Vec<f64>,
    eta: f64,
    cg_tol: f64,
    cg_max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let f = vector(grid.0, f1, f2)?;
    let s = settings(eta, cg_tol, cg_max_iter);
    let sol = py
        .detach(|| core::solve_stokes_obstacle(&f, &grid.0, &mask.0, &s))
        .map_err(to_py)?;
    let (u1, u2) = split(&sol.u);
    let d = PyDict::new(py);
    d.set_item("u1", u1)?;
    d.set_item("u2", u2)?;
    d.set_item("p", sol.p.values().to_vec())?;
    d.set_item("mean", sol.mean.to_vec())?;
    d.set_item("grad_norm", sol.grad_norm)?;
    d.set_item("residual", sol.residual)?;
    d.set_item("iterations", sol.iterations)?;
    d.set_item("divergence_residual", sol.divergence_residual)?;
    Ok(d)
}

/// Returns `(lambda_min, c_p)`.
#[pyfunction]
#[pyo3(signature = (grid, mask, eta=1e-6))]
fn poincare_constant(py: Python<'_>, grid: &PyGrid, mask: &PyMask, eta: f64) -> PyResult<(f64, f64)> {
    let s = SolverSettings::default().with_eta(eta);
    let est = py
        .detach(|| core::poincare_constant(&grid.0, &mask.0, &s))
        .map_err(to_py)?;
    Ok((est.lambda_min, est.c_p))
}

#[pyfunction]
fn leray_project(grid: &PyGrid, u1: Vec<f64>, u2: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let v = vector(grid.0, u1, u2)?;
    let ops = core::SpectralOps::new(&grid.0);
    Ok(split(&ops.leray_project(&v)))
}

#[pyfunction]
fn taylor_green(t: f64, grid: &PyGrid) -> PyResult<(Vec<f64>, Vec<f64>)> {
    core::taylor_green(t, &grid.0).map(|v| split(&v)).map_err(to_py)
}

/// Returns `(l2_lower, grad_sq_exact)` for the log-log test function.
#[pyfunction]
fn lemma22_bounds(r: f64, half_width: f64) -> PyResult<(f64, f64)> {
    core::lemma22_bounds(r, half_width)
        .map(|b| (b.l2_lower, b.grad_sq_exact))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (eps, quad_points=1000))]
fn annulus_h2_blowup(eps: f64, quad_points: usize) -> PyResult<f64> {
    core::annulus_h2_blowup(eps, quad_points).map_err(to_py)
}

#[pyfunction]
fn annulus_leading_term(eps: f64) -> f64 {
    core::oracles::annulus_leading_term(eps)
}

#[pyfunction]
fn gronwall_constant(t: f64) -> f64 {
    core::gronwall_constant(t)
}

/// Unforced NSE from `(u1, u2)`; returns final field, ledger rows
/// `(t, energy, dissipation, forcing)` and the ledger check.
#[pyfunction]
#[pyo3(signature = (grid, mask, u1, u2, t_final, dt, eta=1e-6))]
#[allow(clippy::too_many_arguments)]
fn nse_integrate<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    mask: &PyMask,
    u1: Vec<f64>,
    u2: Vec<f64>,
    t_final: f64,
    dt: f64,
    eta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let u0 = vector(grid.0, u1, u2)?;
    let ts = TimeSettings::new(dt, t_final).map_err(to_py)?;
    let s = SolverSettings::default().with_eta(eta);
    let traj = py
        .detach(|| core::nse_integrate(&u0, &Forcing::Zero, &mask.0, &s, &ts, 0))
        .map_err(to_py)?;
    let check = core::energy_ledger_check(&traj, traj.initial_energy(), t_final);
    let (f1, f2) = split(&traj.final_state.u);
    let ledger: Vec<(f64, f64, f64, f64)> = traj
        .ledger
        .iter()
        .map(|p| (p.t, p.energy, p.dissipation, p.forcing))
        .collect();
    let d = PyDict::new(py);
    d.set_item("u1", f1)?;
    d.set_item("u2", f2)?;
    d.set_item("steps", traj.steps)?;
    d.set_item("max_divergence", traj.max_divergence)?;
    d.set_item("ledger", ledger)?;
    d.set_item("ledger_passed", check.passed)?;
    d.set_item("ledger_margin", check.worst_margin)?;
    Ok(d)
}

/// Runs the experiment described by a TOML string; returns `(csv, passed)`.
#[pyfunction]
#[pyo3(signature = (toml_text, cg_max_iter=None))]
fn run_config(py: Python<'_>, toml_text: &str, cg_max_iter: Option<usize>) -> PyResult<(String, bool)> {
    let cfg = ExperimentConfig::from_toml_str(toml_text).map_err(to_py)?;
    let opts = RunOptions { cg_max_iter };
    let report = py
        .detach(|| match cfg.problem {
            Problem::Poisson => core::run_poisson_sweep(&cfg, &opts),
            Problem::Stokes => core::run_stokes_sweep(&cfg, &opts),
            Problem::Nse => core::run_nse_convergence(&cfg, &opts).map(|(r, _)| r),
        })
        .map_err(to_py)?;
    Ok((core::lab::report_csv(&report), report.passed))
}

#[pyfunction]
fn oracle_table() -> PyResult<String> {
    core::lab::oracle_table().map_err(to_py)
}

#[pymodule]
fn ptlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyMask>()?;
    m.add("CSV_HEADER", core::CSV_HEADER)?;
    m.add_function(wrap_pyfunction!(solve_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(solve_stokes, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_constant, m)?)?;
    m.add_function(wrap_pyfunction!(leray_project, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_green, m)?)?;
    m.add_function(wrap_pyfunction!(lemma22_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(annulus_h2_blowup, m)?)?;
    m.add_function(wrap_pyfunction!(annulus_leading_term, m)?)?;
    m.add_function(wrap_pyfunction!(gronwall_constant, m)?)?;
    m.add_function(wrap_pyfunction!(nse_integrate, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_table, m)?)?;
    Ok(())
}
