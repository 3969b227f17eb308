//! Python bindings. Fields cross the boundary as nested lists indexed
//! `[i][j]`, with `i` along `x1` and `j` along the interior `x2` samples.

use std::f64::consts::PI;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use sqg_core::calculus::{besov_norm, BesovParams, DyadicPartition, Exponent};
use sqg_core::grid::{extrapolated_trace, Field, GridSpec};
use sqg_core::harness::{self, AnalyticityReport, EstimateReport};
use sqg_core::presets::Preset;
use sqg_core::solver::{self, Diagnostics, Scheme, SolverConfig, Trajectory};
use sqg_core::transform::{forward_transform, inverse_transform, Spectrum};
use sqg_core::{nonlinear, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonFiniteStep { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "GridSpec", module = "sqg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGridSpec(GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (n1=64, n2=63, l1=2.0 * PI, l2=PI, dealias_fraction=None))]
    fn new(n1: usize, n2: usize, l1: f64, l2: f64, dealias_fraction: Option<f64>) -> PyResult<Self> {
        let mut g = GridSpec::new(n1, n2, l1, l2).map_err(py_err)?;
        if let Some(f) = dealias_fraction {
            g = g.with_dealias_fraction(f).map_err(py_err)?;
        }
        Ok(Self(g))
    }

    #[getter]
    fn n1(&self) -> usize {
        self.0.n1()
    }

    #[getter]
    fn n2(&self) -> usize {
        self.0.n2()
    }

    #[getter]
    fn l1(&self) -> f64 {
        self.0.l1()
    }

    #[getter]
    fn l2(&self) -> f64 {
        self.0.l2()
    }

    #[getter]
    fn dealias_fraction(&self) -> f64 {
        self.0.dealias_fraction()
    }

    fn x1(&self) -> Vec<f64> {
        (0..self.0.n1()).map(|i| self.0.x1(i)).collect()
    }

    fn x2(&self) -> Vec<f64> {
        (0..self.0.n2()).map(|j| self.0.x2(j)).collect()
    }

    fn eigenvalue(&self, k: i64, m: i64) -> PyResult<f64> {
        self.0.eigenvalue(k, m).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("GridSpec(n1={}, n2={}, l1={}, l2={})", self.0.n1(), self.0.n2(), self.0.l1(), self.0.l2())
    }
}

#[pyclass(name = "Field", module = "sqg", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(Field);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGridSpec, values: Vec<Vec<f64>>) -> PyResult<Self> {
        let g = grid.0;
        if values.len() != g.n1() || values.iter().any(|row| row.len() != g.n2()) {
            return Err(PyValueError::new_err(format!("values must have shape ({}, {})", g.n1(), g.n2())));
        }
        Field::from_values(g, values.concat()).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn zeros(grid: &PyGridSpec) -> Self {
        Self(Field::zeros(grid.0))
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(*self.0.grid())
    }

    fn values(&self) -> Vec<Vec<f64>> {
        self.0.values().chunks(self.0.grid().n2()).map(<[f64]>::to_vec).collect()
    }

    fn linf(&self) -> f64 {
        self.0.linf()
    }

    fn l2(&self) -> f64 {
        self.0.l2()
    }

    fn max_abs_diff(&self, other: &PyField) -> PyResult<f64> {
        self.0.max_abs_diff(&other.0).map_err(py_err)
    }

    /// Boundary values estimated by one-sided polynomial extrapolation.
    fn trace(&self) -> Vec<f64> {
        extrapolated_trace(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Field({}x{}, linf={:e})", self.0.grid().n1(), self.0.grid().n2(), self.0.linf())
    }
}

/// Sine-Fourier coefficients `c(k, m)`.
#[pyclass(name = "Spectrum", module = "sqg", frozen)]
struct PySpectrum(Spectrum);

#[pymethods]
impl PySpectrum {
    fn get(&self, k: i64, m: usize) -> Option<num_complex::Complex64> {
        self.0.get(k, m)
    }

    /// `(k, m, lambda, c)` for every stored mode.
    fn modes(&self) -> Vec<(i64, i64, f64, num_complex::Complex64)> {
        self.0.modes().map(|(idx, k, m, lambda)| (k, m, lambda, self.0.coeffs()[idx])).collect()
    }

    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn max_abs(&self) -> f64 {
        self.0.max_abs()
    }
}

#[pyclass(name = "SolverConfig", module = "sqg", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PySolverConfig {
    dt: f64,
    t_end: f64,
    scheme: String,
    snapshot_stride: usize,
    picard_max_iter: usize,
    picard_tol: f64,
    quadrature_nodes: usize,
    holder_exponent: f64,
    holder_pairs: usize,
}

impl PySolverConfig {
    fn to_core(&self) -> PyResult<SolverConfig> {
        let cfg = SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme.parse::<Scheme>().map_err(py_err)?,
            snapshot_stride: self.snapshot_stride,
            picard_max_iter: self.picard_max_iter,
            picard_tol: self.picard_tol,
            quadrature_nodes: self.quadrature_nodes,
            holder_exponent: self.holder_exponent,
            holder_pairs: self.holder_pairs,
        };
        cfg.validate().map_err(py_err)?;
        Ok(cfg)
    }
}

#[pymethods]
impl PySolverConfig {
    #[new]
    #[pyo3(signature = (
        dt=1e-3, t_end=1.0, scheme="integrating_factor_rk4".to_string(), snapshot_stride=10,
        picard_max_iter=50, picard_tol=1e-10, quadrature_nodes=4, holder_exponent=0.25, holder_pairs=4096
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dt: f64,
        t_end: f64,
        scheme: String,
        snapshot_stride: usize,
        picard_max_iter: usize,
        picard_tol: f64,
        quadrature_nodes: usize,
        holder_exponent: f64,
        holder_pairs: usize,
    ) -> PyResult<Self> {
        let out = Self {
            dt,
            t_end,
            scheme,
            snapshot_stride,
            picard_max_iter,
            picard_tol,
            quadrature_nodes,
            holder_exponent,
            holder_pairs,
        };
        out.to_core()?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("SolverConfig(dt={}, t_end={}, scheme='{}')", self.dt, self.t_end, self.scheme)
    }
}

#[pyclass(name = "Diagnostics", module = "sqg", frozen, get_all)]
struct PyDiagnostics {
    t: f64,
    linf: f64,
    l2: f64,
    besov0: f64,
    besov1: f64,
    holder: f64,
    max_principle_ok: bool,
}

impl From<&Diagnostics> for PyDiagnostics {
    fn from(d: &Diagnostics) -> Self {
        Self {
            t: d.t,
            linf: d.linf,
            l2: d.l2,
            besov0: d.besov0,
            besov1: d.besov1,
            holder: d.holder,
            max_principle_ok: d.max_principle_ok,
        }
    }
}

#[pyclass(name = "Trajectory", module = "sqg", frozen)]
struct PyTrajectory(Trajectory);

#[pymethods]
impl PyTrajectory {
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    fn states(&self) -> Vec<PyField> {
        self.0.states().iter().cloned().map(PyField).collect()
    }

    fn diagnostics(&self) -> Vec<PyDiagnostics> {
        self.0.diagnostics().iter().map(PyDiagnostics::from).collect()
    }

    fn state_at(&self, t: f64) -> Option<PyField> {
        self.0.state_at(t).cloned().map(PyField)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "PicardOutcome", module = "sqg", frozen)]
struct PyPicardOutcome {
    #[pyo3(get)]
    trajectory: Py<PyTrajectory>,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    contraction_history: Vec<f64>,
    #[pyo3(get)]
    distances: Vec<f64>,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    residual: f64,
}

#[pyclass(name = "EstimateReport", module = "sqg", frozen, get_all)]
struct PyEstimateReport {
    name: String,
    samples: usize,
    fitted_constant: f64,
    fitted_exponent: Option<f64>,
    worst_ratio: f64,
    verdict: String,
    notes: String,
}

impl From<EstimateReport> for PyEstimateReport {
    fn from(r: EstimateReport) -> Self {
        Self {
            name: r.name,
            samples: r.samples,
            fitted_constant: r.fitted_constant,
            fitted_exponent: r.fitted_exponent,
            worst_ratio: r.worst_ratio,
            verdict: r.verdict.to_string(),
            notes: r.notes,
        }
    }
}

#[pymethods]
impl PyEstimateReport {
    fn __repr__(&self) -> String {
        format!("EstimateReport({}: {:e} against {:e}, {})", self.name, self.worst_ratio, self.fitted_constant, self.verdict)
    }
}

#[pyclass(name = "AnalyticityReport", module = "sqg", frozen, get_all)]
struct PyAnalyticityReport {
    t: f64,
    beta_max: u32,
    /// `(b1, b2, value, joint)` rows.
    space_table: Vec<(u32, u32, f64, f64)>,
    time_table: Vec<f64>,
    estimated_c: f64,
    estimated_c_joint: f64,
    radius_fit: Option<f64>,
}

impl From<AnalyticityReport> for PyAnalyticityReport {
    fn from(r: AnalyticityReport) -> Self {
        Self {
            t: r.t,
            beta_max: r.beta_max,
            space_table: r.space_table.iter().map(|e| (e.b1, e.b2, e.value, e.joint)).collect(),
            time_table: r.time_table,
            estimated_c: r.estimated_c,
            estimated_c_joint: r.estimated_c_joint,
            radius_fit: r.radius_fit,
        }
    }
}

/// Builds a named initial datum; unused parameters are ignored.
#[pyfunction]
#[pyo3(signature = (
    grid, name, amplitude=0.01, k=1, m=1, x0=PI, y0=0.5 * PI, width=1.0, j_lo=0, j_hi=4, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn preset(
    grid: &PyGridSpec,
    name: &str,
    amplitude: f64,
    k: i64,
    m: usize,
    x0: f64,
    y0: f64,
    width: f64,
    j_lo: i32,
    j_hi: i32,
    seed: u64,
) -> PyResult<PyField> {
    let p = match name {
        "single_mode" => Preset::SingleMode { k, m, amplitude },
        "two_mode" => Preset::TwoMode { amplitude },
        "boundary_bump" => Preset::BoundaryBump { x0, width, amplitude },
        "interior_bump" => Preset::InteriorBump { x0, y0, width, amplitude },
        "random_band" => Preset::RandomBand { j_lo, j_hi, amplitude, seed },
        other => return Err(py_err(Error::UnknownPreset(other.to_string()))),
    };
    p.build(&grid.0).map(PyField).map_err(py_err)
}

#[pyfunction]
fn forward(field: &PyField) -> PyResult<PySpectrum> {
    forward_transform(&field.0).map(PySpectrum).map_err(py_err)
}

#[pyfunction]
fn inverse(spectrum: &PySpectrum) -> PyField {
    PyField(inverse_transform(&spectrum.0))
}

/// `-u . grad theta` with `u` the Riesz velocity of `theta`.
#[pyfunction]
fn nonlinear_term(theta: &PyField) -> PyResult<PyField> {
    nonlinear::nonlinear_term(&theta.0).map(PyField).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (field, s, p=f64::INFINITY, q=1.0, homogeneous=true))]
fn besov(field: &PyField, s: f64, p: f64, q: f64, homogeneous: bool) -> PyResult<f64> {
    let params = BesovParams {
        s,
        p: Exponent::from_f64(p).map_err(py_err)?,
        q: Exponent::from_f64(q).map_err(py_err)?,
        homogeneous,
    };
    besov_norm(&field.0, &params, &DyadicPartition::covering(field.0.grid())).map_err(py_err)
}

#[pyfunction]
fn simulate(py: Python<'_>, theta0: &PyField, config: &PySolverConfig) -> PyResult<PyTrajectory> {
    let cfg = config.to_core()?;
    let theta0 = theta0.0.clone();
    py.detach(move || solver::simulate(&theta0, &cfg)).map(PyTrajectory).map_err(py_err)
}

#[pyfunction]
fn picard(py: Python<'_>, theta0: &PyField, config: &PySolverConfig) -> PyResult<PyPicardOutcome> {
    let cfg = config.to_core()?;
    let theta0 = theta0.0.clone();
    let out = py.detach(move || solver::picard_solve(&theta0, cfg.t_end, &cfg)).map_err(py_err)?;
    Ok(PyPicardOutcome {
        trajectory: Py::new(py, PyTrajectory(out.trajectory))?,
        iterations: out.iterations,
        contraction_history: out.contraction_history,
        distances: out.distances,
        converged: out.converged,
        residual: out.residual,
    })
}

#[pyfunction]
#[pyo3(signature = (trajectory, t, beta_max=harness::DEFAULT_BETA_MAX))]
fn analyticity(trajectory: &PyTrajectory, t: f64, beta_max: u32) -> PyResult<PyAnalyticityReport> {
    harness::analyticity_diagnostic(&trajectory.0, t, beta_max).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (grid, seed=0, pairs=100))]
fn verify_battery(py: Python<'_>, grid: &PyGridSpec, seed: u64, pairs: usize) -> PyResult<Vec<PyEstimateReport>> {
    let g = grid.0;
    let reports = py.detach(move || harness::example_battery(&g, seed, pairs)).map_err(py_err)?;
    Ok(reports.into_iter().map(Into::into).collect())
}

#[pymodule]
fn sqg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PySolverConfig>()?;
    m.add_class::<PyDiagnostics>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyPicardOutcome>()?;
    m.add_class::<PyEstimateReport>()?;
    m.add_class::<PyAnalyticityReport>()?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(inverse, m)?)?;
    m.add_function(wrap_pyfunction!(nonlinear_term, m)?)?;
    m.add_function(wrap_pyfunction!(besov, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(picard, m)?)?;
    m.add_function(wrap_pyfunction!(analyticity, m)?)?;
    m.add_function(wrap_pyfunction!(verify_battery, m)?)?;
    Ok(())
}
