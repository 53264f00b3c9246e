//! Python bindings for `swgmm`.
//!
//! Points are passed as lists of rows, matrices as lists of rows. Invalid
//! input raises `ValueError`; numerical breakdown during a fit raises
//! `ArithmeticError`.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use swgmm::{datasets, io, Dataset, Distribution, EmConfig, FitTrace, GradientRule, Marginal, SliceData, SwmConfig};

fn to_py(e: swgmm::Error) -> PyErr {
    if e.is_numeric() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn dataset(points: Vec<Vec<f64>>) -> PyResult<Dataset> {
    Dataset::from_rows(&points, None).map_err(to_py)
}

fn rows(data: &Dataset) -> Vec<Vec<f64>> {
    data.rows().map(|r| r.to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

/// Trace rows as `(iteration, objective, nll)` tuples.
fn trace_rows(trace: &FitTrace) -> Vec<(usize, f64, f64)> {
    trace.records.iter().map(|r| (r.iteration, r.objective, r.nll)).collect()
}

/// A Gaussian mixture model.
#[pyclass(name = "GmmModel", module = "swgmm_py", frozen)]
struct PyGmmModel {
    inner: swgmm::GmmModel,
}

#[pymethods]
impl PyGmmModel {
    #[new]
    fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Vec<Vec<f64>>>) -> PyResult<Self> {
        let means = means.into_iter().map(DVector::from_vec).collect();
        let covs = covariances.iter().map(|c| matrix(c)).collect::<PyResult<Vec<_>>>()?;
        let inner = swgmm::GmmModel::new(weights, means, covs).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn means(&self) -> Vec<Vec<f64>> {
        self.inner.means().iter().map(|m| m.iter().copied().collect()).collect()
    }

    #[getter]
    fn covariances(&self) -> Vec<Vec<Vec<f64>>> {
        self.inner.covariances().iter().map(matrix_rows).collect()
    }

    /// Density at each point.
    fn density(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        points.iter().map(|x| swgmm::density(&self.inner, x).map_err(to_py)).collect()
    }

    /// Mean negative log-likelihood of the points.
    fn nll(&self, points: Vec<Vec<f64>>) -> PyResult<f64> {
        swgmm::nll(&self.inner, &dataset(points)?).map_err(to_py)
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&swgmm::sample(&self.inner, n, seed).map_err(to_py)?))
    }

    fn to_json(&self) -> PyResult<String> {
        io::model_to_json(&self.inner).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: io::model_from_json(text).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("GmmModel(dim={}, k={}, weights={:?})", self.inner.dim(), self.inner.k(), self.inner.weights())
    }
}

/// Nearest matrix with all eigenvalues at least `eps_var`.
#[pyfunction]
#[pyo3(signature = (matrix_rows_in, eps_var = swgmm::DEFAULT_EPS_VAR))]
fn project_psd(matrix_rows_in: Vec<Vec<f64>>, eps_var: f64) -> PyResult<Vec<Vec<f64>>> {
    let m = matrix(&matrix_rows_in)?;
    Ok(matrix_rows(&swgmm::project_psd(&m, eps_var).map_err(to_py)?))
}

/// Clips negative weights to zero and renormalizes.
#[pyfunction]
fn project_simplex(weights: Vec<f64>) -> PyResult<Vec<f64>> {
    swgmm::project_simplex(&weights).map_err(to_py)
}

/// `l` seeded uniform random unit vectors in `d` dimensions.
#[pyfunction]
fn sample_directions(d: usize, l: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let dirs = swgmm::sample_directions(d, l, seed).map_err(to_py)?;
    Ok(dirs.iter().map(|t| t.as_slice().to_vec()).collect())
}

/// `W_p` between two 1-D sample sets using `m` quantile levels.
#[pyfunction]
#[pyo3(signature = (a, b, p = 2.0, m = swgmm::ot1d::DEFAULT_GRID))]
fn wasserstein_1d(a: Vec<f64>, b: Vec<f64>, p: f64, m: usize) -> PyResult<f64> {
    let a = SliceData::from_values(a).map_err(to_py)?;
    let b = SliceData::from_values(b).map_err(to_py)?;
    swgmm::wasserstein_1d(Marginal::Samples(&a), Marginal::Samples(&b), p, m).map_err(to_py)
}

/// Sliced `W_p` between a model and a point set.
#[pyfunction]
#[pyo3(signature = (model, points, p = 2.0, l = 500, m = swgmm::ot1d::DEFAULT_GRID, seed = 0))]
fn sliced_wasserstein(model: &PyGmmModel, points: Vec<Vec<f64>>, p: f64, l: usize, m: usize, seed: u64) -> PyResult<f64> {
    let data = dataset(points)?;
    swgmm::sliced_wasserstein(Distribution::Model(&model.inner), Distribution::Data(&data), p, l, m, seed)
        .map_err(to_py)
}

/// Fits a mixture by sliced-Wasserstein descent. Returns the model and the
/// trace as `(iteration, objective, nll)` tuples.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, iters = 2000, projections = 20, lr = 0.01, quad_points = 256, p = 2.0, gradient = "transport", init = None))]
#[allow(clippy::too_many_arguments)]
fn fit_swm(
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    iters: usize,
    projections: usize,
    lr: f64,
    quad_points: usize,
    p: f64,
    gradient: &str,
    init: Option<&PyGmmModel>,
) -> PyResult<(PyGmmModel, Vec<(usize, f64, f64)>)> {
    let gradient = match gradient {
        "transport" => GradientRule::Transport,
        "density" => GradientRule::Density,
        other => return Err(PyValueError::new_err(format!("unknown gradient rule {other:?}"))),
    };
    let data = dataset(points)?;
    let config = SwmConfig { seed, iters, l: projections, lr, quad_points, p, gradient, ..SwmConfig::default() };
    let (model, trace) = swgmm::fit_swm(&data, k, &config, init.map(|m| &m.inner)).map_err(to_py)?;
    Ok((PyGmmModel { inner: model }, trace_rows(&trace)))
}

/// Fits a mixture by expectation maximization.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, iters = 500, tol = 1e-7, init = None))]
fn fit_em(
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    iters: usize,
    tol: f64,
    init: Option<&PyGmmModel>,
) -> PyResult<(PyGmmModel, Vec<(usize, f64, f64)>)> {
    let data = dataset(points)?;
    let config = EmConfig { seed, iters, tol, ..EmConfig::default() };
    let (model, trace) = swgmm::fit_em(&data, k, &config, init.map(|m| &m.inner)).map_err(to_py)?;
    Ok((PyGmmModel { inner: model }, trace_rows(&trace)))
}

/// The 2-D ring, square and connecting line point cloud.
#[pyfunction]
#[pyo3(signature = (n, seed = 0, noise = datasets::DEFAULT_NOISE))]
fn gen_ring_square_line(n: usize, seed: u64, noise: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&datasets::gen_ring_square_line(n, seed, noise).map_err(to_py)?))
}

#[pymodule]
fn swgmm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGmmModel>()?;
    m.add_function(wrap_pyfunction!(project_psd, m)?)?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(sample_directions, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_1d, m)?)?;
    m.add_function(wrap_pyfunction!(sliced_wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(fit_swm, m)?)?;
    m.add_function(wrap_pyfunction!(fit_em, m)?)?;
    m.add_function(wrap_pyfunction!(gen_ring_square_line, m)?)?;
    Ok(())
}
