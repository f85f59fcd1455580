//! Python bindings for `qmv_core`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use qmv_core::analytic::{default_orders, gamma_pair_factorized, omega, ApproxOrder};
use qmv_core::encoding::spectrum_enumerate;
use qmv_core::optimize::{ratio_report_from_curve, sweep_gamma, DEFAULT_GRID_SIZE};
use qmv_core::simulator::{build_state, expectation_hp, oracle_mu_curve, sample_bitstrings, DEFAULT_QUBIT_GUARD};
use qmv_core::stats::{ensemble_run, write_outputs};
use qmv_core::{AngleParams, EnsembleConfig, Error, GramMatrix, QuditLayout};

fn to_py_err(err: Error) -> PyErr {
    let msg = format!("[{}] {err}", err.kind());
    match err {
        Error::Io(_) | Error::CheckFailed(_) => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| to_py_err(e.into()))?;
    json_to_py(py, &v)
}

fn gram_of(rows: Vec<Vec<f64>>) -> PyResult<GramMatrix> {
    GramMatrix::from_rows(rows).map_err(to_py_err)
}

fn layout_of(gram: &GramMatrix, k: usize) -> PyResult<QuditLayout> {
    QuditLayout::new(gram.dim(), k).map_err(to_py_err)
}

/// Integer lattice basis with its Gram matrix and generation provenance.
#[pyclass(name = "Lattice", module = "pyqmv", frozen)]
struct PyLattice {
    inner: qmv_core::Lattice,
}

#[pymethods]
impl PyLattice {
    /// Seeded random basis with entries in `[-entry_bound, entry_bound]`.
    #[staticmethod]
    #[pyo3(signature = (dim, seed = 0, entry_bound = 10))]
    fn generate(dim: usize, seed: u64, entry_bound: u32) -> PyResult<Self> {
        let inner = qmv_core::Lattice::generate(dim, entry_bound, seed).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = qmv_core::Lattice::load(&path).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(to_py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.basis.dim()
    }

    #[getter]
    fn basis(&self) -> Vec<Vec<i64>> {
        self.inner.basis.rows().to_vec()
    }

    #[getter]
    fn gram(&self) -> Vec<Vec<f64>> {
        self.inner.gram.to_rows()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn entry_bound(&self) -> u32 {
        self.inner.entry_bound
    }

    fn norm_sq(&self, x: Vec<i64>) -> PyResult<f64> {
        qmv_core::lattice::vector_norm_sq(&self.inner.gram, &x).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Lattice(dim={}, basis={:?})", self.dim(), self.basis())
    }
}

/// Closed-form evaluator of `mu(gamma)` and `mu_A(gamma)` for one Gram matrix and qudit size `k`.
#[pyclass(name = "Evaluator", module = "pyqmv", frozen)]
struct PyEvaluator {
    inner: qmv_core::Evaluator,
}

impl PyEvaluator {
    fn order(&self, a: usize) -> PyResult<ApproxOrder> {
        ApproxOrder::new(a, self.inner.layout()).map_err(to_py_err)
    }

    fn orders(&self, orders: Option<Vec<usize>>) -> PyResult<Vec<ApproxOrder>> {
        match orders {
            Some(list) => list.into_iter().map(|a| self.order(a)).collect(),
            None => Ok(default_orders(self.inner.layout())),
        }
    }
}

#[pymethods]
impl PyEvaluator {
    #[new]
    fn new(gram: Vec<Vec<f64>>, k: usize) -> PyResult<Self> {
        let gram = gram_of(gram)?;
        let layout = layout_of(&gram, k)?;
        let inner = qmv_core::Evaluator::new(&gram, &layout).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.layout().total_qubits()
    }

    fn default_orders(&self) -> Vec<usize> {
        default_orders(self.inner.layout()).into_iter().map(ApproxOrder::get).collect()
    }

    fn mu(&self, gamma: f64) -> f64 {
        self.inner.mu(gamma)
    }

    fn mu_approx(&self, gamma: f64, order: usize) -> PyResult<f64> {
        Ok(self.inner.mu_approx(gamma, self.order(order)?))
    }

    /// `<Z_ip>` in the depth-1 state.
    fn omega(&self, gamma: f64, i: usize, p: usize) -> PyResult<f64> {
        omega(self.inner.gram(), self.inner.layout(), gamma, i, p).map_err(to_py_err)
    }

    /// `<Z_ip Z_jq>` in the depth-1 state.
    fn gamma_pair(&self, gamma: f64, a: (usize, usize), b: (usize, usize)) -> PyResult<f64> {
        gamma_pair_factorized(self.inner.gram(), self.inner.layout(), gamma, a, b).map_err(to_py_err)
    }

    #[pyo3(signature = (order = None))]
    fn summand_count(&self, order: Option<usize>) -> PyResult<usize> {
        let order = order.map(|a| self.order(a)).transpose()?;
        Ok(self.inner.two_qubit_summand_count(order))
    }

    /// Uniform sweep over `[0, pi]`: dict with `gammas`, `mu` and `mu_a` (order -> values).
    #[pyo3(signature = (grid = DEFAULT_GRID_SIZE, orders = None))]
    fn sweep<'py>(&self, py: Python<'py>, grid: usize, orders: Option<Vec<usize>>) -> PyResult<Bound<'py, PyAny>> {
        let orders = self.orders(orders)?;
        let curve = py
            .detach(|| sweep_gamma(&self.inner, "L000", grid, &orders))
            .map_err(to_py_err)?;
        serialize(py, &curve)
    }

    /// `gamma_opt`, baseline ratio and per-order `gamma_A` ratios.
    #[pyo3(signature = (grid = DEFAULT_GRID_SIZE, orders = None, refine = true))]
    fn optimize<'py>(
        &self,
        py: Python<'py>,
        grid: usize,
        orders: Option<Vec<usize>>,
        refine: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let orders = self.orders(orders)?;
        let report = py
            .detach(|| {
                let curve = sweep_gamma(&self.inner, "L000", grid, &orders)?;
                ratio_report_from_curve(&self.inner, &curve, refine)
            })
            .map_err(to_py_err)?;
        serialize(py, &report)
    }
}

/// Exact `<H_P>` from the statevector simulator at each gamma.
#[pyfunction]
#[pyo3(signature = (gram, k, gammas, max_qubits = DEFAULT_QUBIT_GUARD))]
fn oracle_mu(gram: Vec<Vec<f64>>, k: usize, gammas: Vec<f64>, max_qubits: usize) -> PyResult<Vec<f64>> {
    let gram = gram_of(gram)?;
    let layout = layout_of(&gram, k)?;
    oracle_mu_curve(&gram, &layout, &gammas, max_qubits).map_err(to_py_err)
}

/// All basis states as `(index, x, energy)`, ascending by energy.
#[pyfunction]
#[pyo3(signature = (gram, k, max_qubits = DEFAULT_QUBIT_GUARD))]
fn spectrum(gram: Vec<Vec<f64>>, k: usize, max_qubits: usize) -> PyResult<Vec<(u64, Vec<i64>, f64)>> {
    let gram = gram_of(gram)?;
    let layout = layout_of(&gram, k)?;
    let entries = spectrum_enumerate(&gram, &layout, max_qubits).map_err(to_py_err)?;
    Ok(entries.into_iter().map(|e| (e.index, e.x, e.energy)).collect())
}

type SampleOutput = (Vec<(Vec<i64>, f64)>, f64);

/// Samples `(x, energy)` pairs from the depth-1 state; also returns the exact `<H_P>`.
#[pyfunction]
#[pyo3(signature = (gram, k, gamma, count, seed = 0, beta = std::f64::consts::FRAC_PI_4, max_qubits = DEFAULT_QUBIT_GUARD))]
fn sample(
    gram: Vec<Vec<f64>>,
    k: usize,
    gamma: f64,
    count: usize,
    seed: u64,
    beta: f64,
    max_qubits: usize,
) -> PyResult<SampleOutput> {
    let gram = gram_of(gram)?;
    let layout = layout_of(&gram, k)?;
    let state = build_state(&gram, &layout, AngleParams { beta, gamma }, max_qubits).map_err(to_py_err)?;
    let exact = expectation_hp(&state, &gram, &layout).map_err(to_py_err)?;
    let samples = sample_bitstrings(&state, &gram, count, seed).map_err(to_py_err)?;
    Ok((samples.into_iter().map(|s| (s.x, s.energy)).collect(), exact))
}

/// Runs the lattice ensemble; keyword arguments override the default configuration.
/// Returns per-k correlations, violin summaries and minima reports. With
/// `out_dir` the CSV bundle and manifest are written there as well.
#[pyfunction]
#[pyo3(signature = (out_dir = None, **overrides))]
fn ensemble<'py>(
    py: Python<'py>,
    out_dir: Option<PathBuf>,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = serde_json::to_value(EnsembleConfig::default()).map_err(|e| to_py_err(e.into()))?;
    if let Some(kw) = overrides {
        let json = py.import("json")?;
        for (key, value) in kw.iter() {
            let key: String = key.extract()?;
            let text: String = json.call_method1("dumps", (value,))?.extract()?;
            let parsed: serde_json::Value = serde_json::from_str(&text).map_err(|e| to_py_err(e.into()))?;
            config[key] = parsed;
        }
    }
    let config: EnsembleConfig = serde_json::from_value(config).map_err(|e| to_py_err(e.into()))?;
    let stats = py.detach(|| ensemble_run(&config)).map_err(to_py_err)?;
    if let Some(dir) = &out_dir {
        write_outputs(&stats, dir).map_err(to_py_err)?;
    }
    let summary = serde_json::json!({
        "config": stats.config,
        "correlations": stats.correlations,
        "violins": stats.violins,
        "reports": stats.runs.iter().map(|r| (r.k.to_string(), &r.reports)).collect::<std::collections::BTreeMap<_, _>>(),
    });
    json_to_py(py, &summary)
}

#[pymodule]
fn pyqmv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLattice>()?;
    m.add_class::<PyEvaluator>()?;
    m.add_function(wrap_pyfunction!(oracle_mu, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble, m)?)?;
    m.add("DEFAULT_GRID_SIZE", DEFAULT_GRID_SIZE)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
