//! Python bindings. Specs and results cross the boundary as plain dicts
//! (through JSON), states as lists of complex numbers.

use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::DVector;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

use decaylab as dl;
use decaylab::Complex64;

create_exception!(decaylab, DecaylabError, PyException, "Raised for every decaylab failure; `args[1]` is the CLI exit code.");

fn err(e: dl::Error) -> PyErr {
    DecaylabError::new_err((e.to_string(), e.exit_code()))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn state(v: Vec<Complex64>) -> DVector<Complex64> {
    DVector::from_vec(v)
}

/// Finite-element discretization of the Laplace–Beltrami operator.
#[pyclass(name = "Operator", module = "decaylab", frozen)]
struct PyOperator {
    inner: Arc<dl::DiscreteOperator>,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (domain, metric=None))]
    fn new(domain: &Bound<'_, PyAny>, metric: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let domain: dl::DomainSpec = from_py(domain)?;
        let metric: dl::MetricSpec = metric.map(from_py).transpose()?.unwrap_or_default();
        Ok(Self { inner: Arc::new(dl::assemble(&domain, &metric).map_err(err)?) })
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    /// Largest eigenvalue `C_P` of the pencil `(K + M, K + D)`.
    fn poincare_constant(&self, damping: &PyDamping) -> PyResult<f64> {
        Ok(dl::poincare_constant(&self.inner, &damping.inner).map_err(err)?.value)
    }

    fn __repr__(&self) -> String {
        format!("Operator(n_free={}, boundary={:?})", self.inner.n_free(), self.inner.boundary())
    }
}

/// Damping profile `a(x)` with its sandwich bounds.
#[pyclass(name = "Damping", module = "decaylab", frozen)]
struct PyDamping {
    inner: dl::DampingProfile,
    integral: f64,
}

#[pymethods]
impl PyDamping {
    #[new]
    fn new(op: &PyOperator, spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let spec: dl::DampingSpec = from_py(spec)?;
        let inner = dl::build_damping(&spec, &op.inner).map_err(err)?;
        Ok(Self { integral: inner.integral(&op.inner), inner })
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
    fn vol_f(&self) -> f64 {
        self.inner.vol_f
    }

    #[getter]
    fn integral(&self) -> f64 {
        self.integral
    }

    #[getter]
    fn nodal(&self) -> Vec<f64> {
        self.inner.nodal.clone()
    }

    /// `(α, β, vol_F)`; raises when the damping vanishes.
    fn bounds(&self) -> PyResult<(f64, f64, f64)> {
        dl::damping_bounds(&self.inner).map_err(err)
    }
}

/// Mass-orthonormal eigenbasis of the operator.
#[pyclass(name = "Basis", module = "decaylab", frozen)]
struct PyBasis {
    inner: dl::SpectralBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    fn new(op: &PyOperator, count: usize) -> PyResult<Self> {
        Ok(Self { inner: dl::eigendecompose(&op.inner, count).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `λ_k²`.
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues.clone()
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.inner.frequencies()
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.inner.max_residual()
    }

    #[getter]
    fn orthonormality_error(&self) -> f64 {
        self.inner.orthonormality_error()
    }

    /// `κ(Λ, ω)` for an observation spec such as `{"kind": "whole"}`.
    #[pyo3(signature = (observation, lam, damping=None))]
    fn spectral_constant(&self, observation: &Bound<'_, PyAny>, lam: f64, damping: Option<&PyDamping>) -> PyResult<f64> {
        let omega = self.observation(observation, damping)?;
        Ok(dl::spectral_constant(&self.inner, &omega, lam).map_err(err)?.kappa)
    }

    /// `{"lambdas", "kappas", "flagged", "modes", "fit"}` over a cutoff grid.
    #[pyo3(signature = (observation, lambdas, damping=None))]
    fn constant_curve<'py>(
        &self,
        py: Python<'py>,
        observation: &Bound<'py, PyAny>,
        lambdas: Vec<f64>,
        damping: Option<&PyDamping>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let omega = self.observation(observation, damping)?;
        let c = dl::constant_curve(&self.inner, &omega, &lambdas).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("lambdas", c.lambdas)?;
        d.set_item("kappas", c.kappas)?;
        d.set_item("flagged", c.flagged)?;
        d.set_item("modes", c.modes)?;
        d.set_item("fit", c.fit)?;
        Ok(d)
    }
}

impl PyBasis {
    fn observation(&self, spec: &Bound<'_, PyAny>, damping: Option<&PyDamping>) -> PyResult<dl::ObservationSet> {
        let spec: dl::ObservationSpec = from_py(spec)?;
        dl::ObservationSet::from_spec(self.inner.op(), &spec, damping.map(|d| &d.inner)).map_err(err)
    }
}

/// Semigroup generator in spectral coordinates.
#[pyclass(name = "Generator", module = "decaylab", frozen)]
struct PyGenerator {
    inner: dl::Generator,
}

#[pymethods]
impl PyGenerator {
    /// Damped wave generator; Neumann and periodic bases use the quotient by
    /// constants unless `quotient=False`.
    #[staticmethod]
    #[pyo3(signature = (basis, damping, quotient=None))]
    fn wave(basis: &PyBasis, damping: &PyDamping, quotient: Option<bool>) -> PyResult<Self> {
        let g = dl::wave_generator(&basis.inner, &damping.inner).map_err(err)?;
        let q = quotient.unwrap_or(g.boundary.has_zero_mode());
        Ok(Self { inner: if q { dl::neumann_quotient(&g) } else { g } })
    }

    #[staticmethod]
    fn schrodinger(basis: &PyBasis, damping: &PyDamping) -> PyResult<Self> {
        Ok(Self { inner: dl::schrodinger_generator(&basis.inner, &damping.inner).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind {
            dl::EquationKind::Wave => "wave",
            dl::EquationKind::Schrodinger => "schrodinger",
        }
    }

    fn spectrum(&self) -> PyResult<Vec<Complex64>> {
        self.inner.spectrum().map_err(err)
    }

    fn numerical_abscissa(&self) -> f64 {
        self.inner.numerical_abscissa()
    }

    fn smooth_state(&self) -> Vec<Complex64> {
        self.inner.smooth_state().iter().copied().collect()
    }

    fn energy(&self, s: Vec<Complex64>) -> f64 {
        self.inner.energy(&state(s))
    }

    fn dissipation_quotient(&self, s: Vec<Complex64>) -> f64 {
        self.inner.dissipation_quotient(&state(s))
    }

    /// `‖(G − iτ)^{-1}‖` in the weighted norm (`inf` on the spectrum).
    fn resolvent_norm(&self, tau: f64) -> f64 {
        dl::resolvent_norm(&self.inner, tau)
    }

    fn helmholtz_solve(&self, tau: f64, rhs: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        Ok(dl::helmholtz_solve(&self.inner, tau, &state(rhs)).map_err(err)?.iter().copied().collect())
    }

    /// Exact evolution at the given times.
    fn evolve(&self, s: Vec<Complex64>, times: Vec<f64>) -> PyResult<PyEvolution> {
        Ok(PyEvolution { inner: dl::evolve_oracle(&self.inner, &state(s), &times).map_err(err)? })
    }

    /// Implicit-midpoint evolution.
    #[pyo3(signature = (s, dt, t_end, record_every=1))]
    fn evolve_stepped(&self, s: Vec<Complex64>, dt: f64, t_end: f64, record_every: usize) -> PyResult<PyEvolution> {
        let opts = dl::StepOptions { record_every, keep_states: false };
        Ok(PyEvolution { inner: dl::evolve_stepped_with(&self.inner, &state(s), dt, t_end, opts).map_err(err)? })
    }

    fn scan(&self, mu_max: f64, grid_points: usize) -> PyResult<PyScan> {
        Ok(PyScan { inner: dl::scan_m(&self.inner, mu_max, grid_points).map_err(err)? })
    }

    fn required_grid_points(&self, mu_max: f64) -> usize {
        dl::required_grid_points(&self.inner, mu_max)
    }
}

#[pyclass(name = "Evolution", module = "decaylab", frozen)]
struct PyEvolution {
    inner: dl::EvolutionResult,
}

#[pymethods]
impl PyEvolution {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies.clone()
    }

    #[getter]
    fn final_state(&self) -> Vec<Complex64> {
        self.inner.final_state.iter().copied().collect()
    }

    /// Sobolev norm of the initial data (H²×H¹ or H²).
    #[getter]
    fn initial_sobolev(&self) -> f64 {
        self.inner.initial_sobolev
    }

    #[pyo3(signature = (p, window=None))]
    fn fit_log_decay<'py>(&self, py: Python<'py>, p: f64, window: Option<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
        let fit = match window {
            Some((lo, hi)) => dl::fit_log_decay_window(&self.inner, p, lo, hi),
            None => dl::fit_log_decay(&self.inner, p),
        };
        to_py(py, &fit.map_err(err)?)
    }

    fn bound_stability<'py>(&self, py: Python<'py>, p: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dl::bound_stability(&self.inner, p).map_err(err)?)
    }

    fn check_monotone<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dl::check_monotone(&self.inner))
    }
}

#[pyclass(name = "Scan", module = "decaylab", frozen)]
struct PyScan {
    inner: dl::ResolventScan,
}

fn model(name: &str) -> PyResult<dl::GrowthModel> {
    match name {
        "exp" => Ok(dl::GrowthModel::Exp),
        "exp_sqrt" => Ok(dl::GrowthModel::ExpSqrt),
        other => Err(PyValueError::new_err(format!("unknown growth model {other:?} (use 'exp' or 'exp_sqrt')"))),
    }
}

#[pymethods]
impl PyScan {
    #[getter]
    fn taus(&self) -> Vec<f64> {
        self.inner.taus.clone()
    }

    #[getter]
    fn norms(&self) -> Vec<f64> {
        self.inner.norms.clone()
    }

    #[getter]
    fn sigma_min(&self) -> Vec<f64> {
        self.inner.sigma_min.clone()
    }

    #[getter]
    fn running_m(&self) -> Vec<f64> {
        self.inner.running_m.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Growth envelope `M(μ) ≤ C e^{c φ(μ)}` for `model` in `{"exp", "exp_sqrt"}`.
    #[pyo3(signature = (growth="exp", window=None))]
    fn fit<'py>(&self, py: Python<'py>, growth: &str, window: Option<(f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
        let m = model(growth)?;
        let fit = match window {
            Some((lo, hi)) => dl::fit_growth_window(&self.inner, m, lo, hi),
            None => dl::fit_growth(&self.inner, m),
        };
        to_py(py, &fit.map_err(err)?)
    }

    fn knee(&self) -> f64 {
        dl::knee(&self.inner)
    }
}

/// Decay exponents implied by a resolvent growth model.
#[pyfunction]
#[pyo3(signature = (growth, k=1))]
fn burq_prediction<'py>(py: Python<'py>, growth: &str, k: u32) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &dl::burq_exponents(model(growth)?, k))
}

/// Runs a full CLI task from a config dict (or JSON string) and returns the
/// manifest.
#[pyfunction]
#[pyo3(signature = (config, out_dir, task=None))]
fn run<'py>(py: Python<'py>, config: &Bound<'py, PyAny>, out_dir: PathBuf, task: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let text: String = match config.extract::<String>() {
        Ok(s) => s,
        Err(_) => py.import("json")?.call_method1("dumps", (config,))?.extract()?,
    };
    let mut cfg = dl::RunConfig::from_json(&text).map_err(err)?;
    if let Some(t) = task {
        cfg.task = from_py(t)?;
    }
    let manifest = py.detach(|| dl::run(&cfg, &out_dir)).map_err(err)?;
    to_py(py, &manifest)
}

#[pymodule]
#[pyo3(name = "decaylab")]
fn decaylab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DecaylabError", m.py().get_type::<DecaylabError>())?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyDamping>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyEvolution>()?;
    m.add_class::<PyScan>()?;
    m.add_function(wrap_pyfunction!(burq_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
