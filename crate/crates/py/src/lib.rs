//! Python bindings: module `kclosure`.

use kinetic_closure::ce_expansion;
use kinetic_closure::dispersion::{self, DispersionQuery, DispersionResult};
use kinetic_closure::evolution::{self, AttractionStart, EvolveConfig, Model, MomentState, SupercriticalPolicy};
use kinetic_closure::operator;
use kinetic_closure::specfun;
use kinetic_closure::{Complex64, Error};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    let msg = format!("{} ({})", e, e.kind());
    if e.is_validation() {
        PyValueError::new_err(msg)
    } else {
        PyArithmeticError::new_err(msg)
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for kinetic_closure::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyfunction]
fn erf(x: f64) -> PyResult<f64> {
    specfun::erf(x).py()
}

#[pyfunction]
fn erfc(x: f64) -> PyResult<f64> {
    specfun::erfc(x).py()
}

#[pyfunction]
fn erfcx(x: f64) -> PyResult<f64> {
    specfun::erfcx(x).py()
}

#[pyfunction]
fn dawson(x: f64) -> PyResult<f64> {
    specfun::dawson(x).py()
}

#[pyfunction]
fn faddeeva_w(z: Complex64) -> PyResult<Complex64> {
    specfun::faddeeva_w(z).py()
}

#[pyfunction]
fn k_crit(tau: f64) -> PyResult<f64> {
    dispersion::k_crit(tau).py()
}

#[pyfunction]
fn solve_x_star(s: f64) -> PyResult<f64> {
    dispersion::solve_x_star(s).py()
}

#[pyfunction]
fn g_tilde(x: f64) -> PyResult<f64> {
    dispersion::g_tilde(x).py()
}

/// Root of the dispersion relation at one `(k, tau)`.
#[pyclass(name = "DispersionResult", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDispersion {
    #[pyo3(get)]
    k: f64,
    #[pyo3(get)]
    tau: f64,
    #[pyo3(get)]
    x_star: f64,
    #[pyo3(get)]
    lambda_star: f64,
    #[pyo3(get)]
    residual: f64,
    #[pyo3(get)]
    in_range: bool,
}

impl From<DispersionResult> for PyDispersion {
    fn from(r: DispersionResult) -> Self {
        Self {
            k: r.k,
            tau: r.tau,
            x_star: r.x_star,
            lambda_star: r.lambda_star,
            residual: r.residual,
            in_range: r.in_range,
        }
    }
}

#[pymethods]
impl PyDispersion {
    /// `lambda* + 1/tau`.
    #[getter]
    fn gap(&self) -> f64 {
        self.lambda_star + 1.0 / self.tau
    }

    fn __repr__(&self) -> String {
        format!("DispersionResult(k={}, tau={}, lambda_star={})", self.k, self.tau, self.lambda_star)
    }
}

#[pyfunction]
fn lambda_star(k: f64, tau: f64) -> PyResult<PyDispersion> {
    dispersion::lambda_star(DispersionQuery::new(k, tau).py()?).py().map(Into::into)
}

/// Many wave numbers at once; out-of-range entries have `in_range = False`.
#[pyfunction]
fn sweep(ks: Vec<f64>, tau: f64) -> PyResult<Vec<PyDispersion>> {
    Ok(dispersion::sweep(&ks, tau).py()?.into_iter().map(Into::into).collect())
}

#[pyfunction]
fn lambda_series(k: f64, tau: f64, order: u32) -> PyResult<f64> {
    dispersion::lambda_series(DispersionQuery::new(k, tau).py()?, order).py()
}

/// `(tau_power, k_power, coeff)` with the exact coefficient as `"p"` or `"p/q"`.
#[pyfunction]
fn ce_terms(order: usize) -> PyResult<Vec<(u32, u32, String)>> {
    let ce = ce_expansion::ce_recursion(order).py()?;
    Ok(ce
        .terms
        .iter()
        .map(|t| (t.tau_power, t.k_power, ce_expansion::format_rational(&t.coeff)))
        .collect())
}

#[pyfunction]
fn ritz_values(k: f64, tau: f64, n: usize) -> PyResult<Vec<Complex64>> {
    operator::ritz_values(&operator::build_truncated(k, tau, n).py()?).py()
}

/// `(lambda_N, coefficients, relative residual)` of the slow eigenpair of `T_N(k)`.
#[pyfunction]
fn slow_eigenpair(k: f64, tau: f64, n: usize) -> PyResult<(Complex64, Vec<Complex64>, f64)> {
    let op = operator::build_truncated(k, tau, n).py()?;
    let (lam, v) = operator::slow_eigenvalue_truncated(&op, operator::default_guess(k, tau).py()?, 100).py()?;
    Ok((lam, v.coeffs, v.residual_rel))
}

/// Slow eigenvector from the three-term recurrence at a given `lambda`.
#[pyfunction]
fn eigenvector_recurrence(k: f64, tau: f64, lam: f64, n: usize) -> PyResult<(Vec<Complex64>, f64)> {
    let v = operator::eigenvector_recurrence(k, tau, lam, n).py()?;
    Ok((v.coeffs, v.residual_rel))
}

/// Periodic density with its discrete Fourier coefficients.
#[pyclass(name = "SpectralField", frozen, from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: evolution::SpectralField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(length: f64, samples: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: evolution::SpectralField::from_samples(length, samples).py()?,
        })
    }

    #[staticmethod]
    fn from_modes(length: f64, modes: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: evolution::SpectralField::from_modes(length, modes).py()?,
        })
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    #[getter]
    fn modes(&self) -> Vec<Complex64> {
        self.inner.modes.clone()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        (0..self.inner.n_grid).map(|j| self.inner.x(j)).collect()
    }

    fn wave_number(&self, j: usize) -> f64 {
        self.inner.wave_number(j)
    }

    fn __len__(&self) -> usize {
        self.inner.n_grid
    }
}

/// Time integration settings; `model` and `policy` take the CLI names.
#[pyclass(name = "EvolveConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: EvolveConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (model, tau, dt, t_end, n_moments = 64, policy = "damp_essential", save_every = 1))]
    fn new(model: &str, tau: f64, dt: f64, t_end: f64, n_moments: usize, policy: &str, save_every: usize) -> PyResult<Self> {
        let mut inner = EvolveConfig::new(Model::parse(model).py()?, tau, dt, t_end);
        inner.n_moments = n_moments;
        inner.supercritical_policy = SupercriticalPolicy::parse(policy).py()?;
        inner.save_every = save_every;
        inner.validate().py()?;
        Ok(Self { inner })
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model.name()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    #[getter]
    fn output_times(&self) -> Vec<f64> {
        self.inner.output_times()
    }
}

/// `(times, fields)` for the configured model.
#[pyfunction]
fn evolve(field: &PyField, cfg: &PyConfig) -> PyResult<(Vec<f64>, Vec<PyField>)> {
    let tr = evolution::evolve(&field.inner, &cfg.inner).py()?;
    Ok((tr.times, tr.states.into_iter().map(|inner| PyField { inner }).collect()))
}

/// Kinetic density of one mode from local equilibrium: `(times, rho_hat)`.
#[pyfunction]
#[pyo3(signature = (k, tau, rho0, t_end, dt, n_moments = 64))]
fn kinetic_mode(k: f64, tau: f64, rho0: Complex64, t_end: f64, dt: f64, n_moments: usize) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
    let mut cfg = EvolveConfig::new(Model::KineticTruncated, tau, dt, t_end);
    cfg.n_moments = n_moments;
    let tr = evolution::kinetic_evolve(&MomentState::equilibrium(k, n_moments, rho0), &cfg).py()?;
    Ok((tr.times, tr.states.iter().map(|s| s.density()).collect()))
}

/// One row per populated mode, as dicts with the CLI column names.
#[pyfunction]
#[pyo3(signature = (field, tau, n_moments, t_end, start = "equilibrium", seed = 7))]
fn attraction_report<'py>(
    py: Python<'py>,
    field: &PyField,
    tau: f64,
    n_moments: usize,
    t_end: f64,
    start: &str,
    seed: u64,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let start = match start {
        "equilibrium" => AttractionStart::Equilibrium,
        "white" => AttractionStart::White { seed },
        other => return Err(PyValueError::new_err(format!("start must be 'equilibrium' or 'white', got '{other}'"))),
    };
    let rows = py
        .detach(|| evolution::attraction_report_with(&field.inner, tau, n_moments, t_end, start))
        .py()?;
    rows.iter()
        .map(|r| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("mode", r.mode)?;
            d.set_item("k", r.k)?;
            d.set_item("excluded", r.excluded)?;
            d.set_item("lambda_star", r.lambda_star)?;
            d.set_item("gap", r.gap)?;
            d.set_item("fitted_rate", r.fitted_rate)?;
            d.set_item("mismatch", r.mismatch)?;
            d.set_item("projected_mismatch", r.projected_mismatch)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
pub fn kclosure(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("S_CRIT", dispersion::S_CRIT)?;
    m.add_class::<PyDispersion>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(erf, m)?)?;
    m.add_function(wrap_pyfunction!(erfc, m)?)?;
    m.add_function(wrap_pyfunction!(erfcx, m)?)?;
    m.add_function(wrap_pyfunction!(dawson, m)?)?;
    m.add_function(wrap_pyfunction!(faddeeva_w, m)?)?;
    m.add_function(wrap_pyfunction!(k_crit, m)?)?;
    m.add_function(wrap_pyfunction!(solve_x_star, m)?)?;
    m.add_function(wrap_pyfunction!(g_tilde, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_star, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_series, m)?)?;
    m.add_function(wrap_pyfunction!(ce_terms, m)?)?;
    m.add_function(wrap_pyfunction!(ritz_values, m)?)?;
    m.add_function(wrap_pyfunction!(slow_eigenpair, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvector_recurrence, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(kinetic_mode, m)?)?;
    m.add_function(wrap_pyfunction!(attraction_report, m)?)?;
    Ok(())
}
