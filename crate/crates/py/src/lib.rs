//! Python bindings: `import schottky`.

use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use schottky_core::igusa::schottky_igusa as igusa_form;
use schottky_core::linalg::{CMatrix, CVector};
use schottky_core::siegel::siegel_reduce;
use schottky_core::solver::{self, SolverConfig, StartStrategy};
use schottky_core::theta::{default_radius, Characteristic};
use schottky_core::{zoo, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownName(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A symmetric complex matrix with positive definite imaginary part.
#[pyclass(name = "RiemannMatrix", module = "schottky", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRiemannMatrix {
    inner: schottky_core::RiemannMatrix,
}

#[pymethods]
impl PyRiemannMatrix {
    #[new]
    fn new(rows: Vec<Vec<C64>>) -> PyResult<Self> {
        let g = rows.len();
        if g == 0 || rows.iter().any(|r| r.len() != g) {
            return Err(PyValueError::new_err("matrix must be square and non-empty"));
        }
        let m = CMatrix::from_fn(g, g, |i, j| rows[i][j]);
        let inner = schottky_core::RiemannMatrix::new(m).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn genus(&self) -> usize {
        self.inner.genus()
    }

    #[getter]
    fn y_min(&self) -> f64 {
        self.inner.y_min()
    }

    fn to_list(&self) -> Vec<Vec<C64>> {
        let m = self.inner.matrix();
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    /// Returns `(reduced, transform)` where `transform` is the full
    /// `2g x 2g` integer symplectic matrix.
    fn reduce(&self) -> PyResult<(Self, Vec<Vec<i64>>)> {
        let (red, rep) = siegel_reduce(&self.inner).map_err(py_err)?;
        let t = rep.transform.to_full();
        let rows = (0..t.nrows()).map(|i| t.row(i).iter().map(|&x| x as i64).collect()).collect();
        Ok((Self { inner: red }, rows))
    }

    fn perturb_diag(&self, s: f64) -> PyResult<Self> {
        let inner = zoo::diagonal_perturbation(&self.inner, s, None).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        format!("RiemannMatrix(genus={}, y_min={:.6})", self.inner.genus(), self.inner.y_min())
    }
}

/// Theta function with characteristic `[p, q]` at `z`; returns `(value, gradient)`.
#[pyfunction]
#[pyo3(signature = (z, b, p=None, q=None, radius=None))]
fn theta(
    z: Vec<C64>,
    b: &PyRiemannMatrix,
    p: Option<Vec<f64>>,
    q: Option<Vec<f64>>,
    radius: Option<usize>,
) -> PyResult<(C64, Vec<C64>)> {
    let g = b.inner.genus();
    if z.len() != g {
        return Err(PyValueError::new_err(format!("z has length {}, genus is {g}", z.len())));
    }
    let ch = Characteristic::new(
        p.unwrap_or_else(|| vec![0.0; g]).into(),
        q.unwrap_or_else(|| vec![0.0; g]).into(),
    )
    .map_err(py_err)?;
    if ch.genus() != g {
        return Err(PyValueError::new_err("characteristic length does not match genus"));
    }
    let r = match radius {
        Some(r) if r >= 1 => r,
        Some(_) => return Err(PyValueError::new_err("radius must be at least 1")),
        None => default_radius(b.inner.y_min(), solver::THETA_TOLERANCE).map_err(py_err)?,
    };
    let e = schottky_core::theta::theta(&CVector::from_vec(z), &b.inner, &ch, r);
    Ok((e.value, e.gradient.iter().copied().collect()))
}

/// The genus-4 Schottky-Igusa form.
#[pyfunction]
fn schottky_igusa(b: &PyRiemannMatrix) -> PyResult<C64> {
    igusa_form(&b.inner).map_err(py_err)
}

fn config(
    delta: f64,
    seed: u64,
    ell0: f64,
    d_ell: f64,
    ell_max: f64,
    n_max: usize,
    strategy: &str,
) -> PyResult<SolverConfig> {
    let start_strategy: StartStrategy = strategy.parse().map_err(py_err)?;
    let cfg = SolverConfig {
        delta,
        seed,
        ell0,
        d_ell,
        ell_max,
        n_max,
        start_strategy,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// Runs the Jacobi-locus test; the verdict comes back as a dict.
#[pyfunction]
#[pyo3(signature = (b, delta=1e-10, seed=0, ell0=0.1, d_ell=0.1, ell_max=0.5, n_max=100, strategy="half_period"))]
#[allow(clippy::too_many_arguments)]
fn check<'py>(
    py: Python<'py>,
    b: &PyRiemannMatrix,
    delta: f64,
    seed: u64,
    ell0: f64,
    d_ell: f64,
    ell_max: f64,
    n_max: usize,
    strategy: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(delta, seed, ell0, d_ell, ell_max, n_max, strategy)?;
    let inner = b.inner.clone();
    let v = py.detach(move || solver::schottky_test(&inner, &cfg)).map_err(py_err)?;
    to_json(py, &v)
}

/// Residual floor against a diagonal perturbation of size `s`, one dict per `s`.
#[pyfunction]
#[pyo3(signature = (b, s_list, delta=1e-10, seed=0))]
fn sweep<'py>(
    py: Python<'py>,
    b: &PyRiemannMatrix,
    s_list: Vec<f64>,
    delta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(delta, seed, 0.1, 0.1, 0.5, 100, "half_period")?;
    let base = b.inner.clone();
    let rows = py
        .detach(move || solver::precision_sweep(|s| zoo::diagonal_perturbation(&base, s, None), &s_list, &cfg))
        .map_err(py_err)?;
    to_json(py, &rows)
}

/// A built-in test matrix; `tau` parametrises the exact genus-4 family.
#[pyfunction]
#[pyo3(signature = (name, tau=C64::new(1.0, 1.0)))]
fn zoo_matrix<'py>(py: Python<'py>, name: &str, tau: C64) -> PyResult<(PyRiemannMatrix, Bound<'py, PyDict>)> {
    let rec = zoo::by_name(name, tau).map_err(py_err)?;
    let meta = PyDict::new(py);
    meta.set_item("name", &rec.name)?;
    meta.set_item("genus", rec.genus)?;
    meta.set_item("stated_accuracy", rec.stated_accuracy)?;
    meta.set_item("source", to_json(py, &rec.source)?)?;
    Ok((PyRiemannMatrix { inner: rec.matrix }, meta))
}

#[pyfunction]
fn zoo_names() -> Vec<&'static str> {
    zoo::EMBEDDED_NAMES.to_vec()
}

#[pymodule]
fn schottky(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRiemannMatrix>()?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(schottky_igusa, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(zoo_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(zoo_names, m)?)?;
    Ok(())
}
