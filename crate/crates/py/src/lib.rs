//! Python bindings. Labels and relation indices are 0-based, as in the Rust API.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hypersbm_core::refine::{DetectConfig, Mode};
use hypersbm_core::spectral::SpectralConfig;
use hypersbm_core::{self as core, HsbmError};

fn to_py(e: HsbmError) -> PyErr {
    match e {
        HsbmError::InvalidArgument(_) | HsbmError::Parse { .. } => PyValueError::new_err(e.to_string()),
        HsbmError::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ModelParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: core::ModelParams,
}

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (n, k, d, p, eta = 0.5))]
    fn new(n: usize, k: usize, d: usize, p: Vec<f64>, eta: f64) -> PyResult<Self> {
        let inner = core::ModelParams::new(n, k, d, eta, p).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Probabilities `a_i / n^(d-1)`.
    #[staticmethod]
    #[pyo3(signature = (n, k, d, a, eta = 0.5))]
    fn scaled(n: usize, k: usize, d: usize, a: Vec<f64>, eta: f64) -> PyResult<Self> {
        let inner = core::ModelParams::from_scaled(n, k, d, eta, &a).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }
    #[getter]
    fn p(&self) -> Vec<f64> {
        self.inner.p.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModelParams(n={}, k={}, d={}, p={:?}, eta={})",
            self.inner.n, self.inner.k, self.inner.d, self.inner.p, self.inner.eta
        )
    }
}

#[pyclass(name = "Hypergraph", frozen)]
struct PyHypergraph {
    inner: core::Hypergraph,
}

#[pymethods]
impl PyHypergraph {
    #[new]
    fn new(n: usize, d: usize, edges: Vec<Vec<usize>>) -> PyResult<Self> {
        let inner = core::Hypergraph::new(n, d, edges).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let inner = core::io::read_hypergraph(std::io::BufReader::new(f)).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        let f = std::fs::File::create(path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        core::io::write_hypergraph(&self.inner, std::io::BufWriter::new(f)).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }
    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn edges(&self) -> Vec<Vec<usize>> {
        self.inner
            .edges()
            .map(|e| e.iter().map(|&v| v as usize).collect())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.edge_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Hypergraph(n={}, d={}, edges={})",
            self.inner.n(),
            self.inner.d(),
            self.inner.edge_count()
        )
    }
}

#[pyfunction]
fn balanced_assignment(n: usize, k: usize) -> PyResult<Vec<usize>> {
    Ok(core::balanced_assignment(n, k).map_err(to_py)?.into_labels())
}

/// Samples a hypergraph with planted balanced communities.
#[pyfunction]
#[pyo3(signature = (params, seed, labels = None))]
fn sample_hypergraph(
    py: Python<'_>,
    params: &PyModelParams,
    seed: u64,
    labels: Option<Vec<usize>>,
) -> PyResult<PyHypergraph> {
    let p = &params.inner;
    let a = match labels {
        Some(l) => core::Assignment::new(l, p.k).map_err(to_py)?,
        None => core::balanced_assignment(p.n, p.k).map_err(to_py)?,
    };
    let inner = py
        .detach(|| core::sample_hypergraph(p, &a, seed, core::model::DEFAULT_SAMPLE_BUDGET))
        .map_err(to_py)?;
    Ok(PyHypergraph { inner })
}

#[pyfunction]
#[pyo3(signature = (graph, k, mode = "simplified", mu = 0.5, tau_factor = 3.0, eps_clamp = None))]
fn detect(
    py: Python<'_>,
    graph: &PyHypergraph,
    k: usize,
    mode: &str,
    mu: f64,
    tau_factor: f64,
    eps_clamp: Option<f64>,
) -> PyResult<Vec<usize>> {
    let cfg = DetectConfig {
        mode: mode.parse::<Mode>().map_err(to_py)?,
        spectral: SpectralConfig {
            mu,
            tau_factor,
            ..SpectralConfig::default()
        },
        eps: eps_clamp,
    };
    let a = py.detach(|| core::detect(&graph.inner, k, &cfg)).map_err(to_py)?;
    Ok(a.into_labels())
}

/// Returns `(ratio, permutation)` where `permutation[s]` is the true label matched to `s`.
#[pyfunction]
fn mismatch_ratio(est: Vec<usize>, truth: Vec<usize>, k: usize) -> PyResult<(f64, Vec<usize>)> {
    let e = core::Assignment::new(est, k).map_err(to_py)?;
    let t = core::Assignment::new(truth, k).map_err(to_py)?;
    let m = core::mismatch_ratio(&e, &t).map_err(to_py)?;
    Ok((m.ratio, m.permutation))
}

/// Sorted histograms of every relation, most concentrated first.
#[pyfunction]
fn relations(d: usize, k: usize) -> PyResult<Vec<Vec<usize>>> {
    let t = core::RelationTable::new(d, k).map_err(to_py)?;
    Ok(t.histograms().iter().map(|h| h.parts().to_vec()).collect())
}

#[pyfunction]
fn neighbor_pairs(d: usize, k: usize) -> PyResult<Vec<(usize, usize)>> {
    let t = core::RelationTable::new(d, k).map_err(to_py)?;
    Ok(core::neighbor_pairs(&t).pairs().to_vec())
}

/// `[(i, j, m)]` for every confusable pair.
#[pyfunction]
fn confusion_coefficients(d: usize, k: usize, n: usize) -> PyResult<Vec<(usize, usize, u128)>> {
    let t = core::RelationTable::new(d, k).map_err(to_py)?;
    let c = core::confusion_coefficients(&t, &core::neighbor_pairs(&t), n).map_err(to_py)?;
    Ok(c.entries().iter().map(|e| (e.pair.0, e.pair.1, e.m)).collect())
}

#[pyfunction]
fn renyi_half(p: f64, q: f64) -> PyResult<f64> {
    core::rate::renyi_half(p, q).map_err(to_py)
}

/// Error exponent `E` of the model.
#[pyfunction]
fn minimax_exponent(params: &PyModelParams) -> PyResult<f64> {
    let p = &params.inner;
    let t = p.table().map_err(to_py)?;
    let c = core::confusion_coefficients(&t, &core::neighbor_pairs(&t), p.n).map_err(to_py)?;
    Ok(core::minimax_exponent(p, &c).map_err(to_py)?.exponent)
}

#[pymodule]
fn hypersbm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyHypergraph>()?;
    m.add_function(wrap_pyfunction!(balanced_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(sample_hypergraph, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(mismatch_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(relations, m)?)?;
    m.add_function(wrap_pyfunction!(neighbor_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(confusion_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_half, m)?)?;
    m.add_function(wrap_pyfunction!(minimax_exponent, m)?)?;
    Ok(())
}
