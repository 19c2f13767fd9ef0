//! Python module `ebmc`: observation matrices, synthetic data, Monte Carlo
//! EM fits, predictive probabilities, metrics and the Efron–Morris
//! reference estimator. Matrices cross the boundary as lists of rows.

use std::fs::File;
use std::io::BufReader;

use ebmc_core::datasets;
use ebmc_core::efron_morris::{self, GaussianMatrixObservation};
use ebmc_core::metrics;
use ebmc_core::synth::{self, OffsetMode, SynthConfig};
use ebmc_core::{
    BinaryObservationMatrix, DenseMatrix, FitResult, InitMode, McemConfig, PosteriorSampleSet, RngMode, Variant,
};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: ebmc_core::Error) -> PyErr {
    match e {
        ebmc_core::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn rows_of_dense(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn rows_of_na(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn na_of_rows(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let q = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != q) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Ok(DMatrix::from_row_slice(rows.len(), q, &rows.concat()))
}

/// Partially observed binary matrix.
#[pyclass(name = "ObservationMatrix", module = "ebmc", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyObservationMatrix {
    inner: BinaryObservationMatrix,
}

#[pymethods]
impl PyObservationMatrix {
    /// `entries` is a list of `(i, j, y)` with zero-based indices and `y` in {0, 1}.
    #[new]
    fn new(p: usize, q: usize, entries: Vec<(usize, usize, u8)>) -> PyResult<Self> {
        let inner = BinaryObservationMatrix::from_triplets(p, q, &entries).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter]
    fn n_observed(&self) -> usize {
        self.inner.n_observed()
    }

    fn get(&self, i: usize, j: usize) -> Option<u8> {
        self.inner.get(i, j)
    }

    fn entries(&self) -> Vec<(usize, usize, u8)> {
        self.inner.entries().iter().map(|e| (e.i, e.j, e.y)).collect()
    }

    fn unobserved(&self) -> Vec<(usize, usize)> {
        self.inner.unobserved().collect()
    }

    /// Random holdout: returns `(train, test_cells, test_outcomes)`.
    fn holdout_split(
        &self,
        test_fraction: f64,
        seed: u64,
    ) -> PyResult<(PyObservationMatrix, Vec<(usize, usize)>, Vec<u8>)> {
        let (train, split) = datasets::holdout_split(&self.inner, test_fraction, seed).map_err(py_err)?;
        Ok((Self { inner: train }, split.test_omega, split.test_outcomes))
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservationMatrix(p={}, q={}, n_observed={})",
            self.inner.p(),
            self.inner.q(),
            self.inner.n_observed()
        )
    }
}

/// One synthetic benchmark instance.
#[pyclass(name = "SynthInstance", module = "ebmc", frozen)]
pub struct PySynthInstance {
    inner: synth::SynthInstance,
}

#[pymethods]
impl PySynthInstance {
    #[getter]
    fn y(&self) -> PyObservationMatrix {
        PyObservationMatrix { inner: self.inner.y.clone() }
    }

    #[getter]
    fn m_true(&self) -> Vec<Vec<f64>> {
        rows_of_dense(&self.inner.m_true)
    }

    #[getter]
    fn true_probs(&self) -> Vec<Vec<f64>> {
        rows_of_dense(&self.inner.true_probs)
    }

    /// `(cells, probs)` over the unobserved cells.
    fn unobserved_truth(&self) -> (Vec<(usize, usize)>, Vec<f64>) {
        self.inner.unobserved_truth()
    }
}

/// `offset=None` for no offsets, or `(lo, hi)` for per-column offsets drawn
/// uniformly from `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (p=1000, q=100, r=5, s=1.0, omega_fraction=0.5, offset=None, seed=0))]
fn generate_synthetic(
    p: usize,
    q: usize,
    r: usize,
    s: f64,
    omega_fraction: f64,
    offset: Option<(f64, f64)>,
    seed: u64,
) -> PyResult<PySynthInstance> {
    let offset = match offset {
        None => OffsetMode::Zero,
        Some((lo, hi)) => OffsetMode::UniformColumns { lo, hi },
    };
    let cfg = SynthConfig { p, q, r, s, omega_fraction, offset, seed };
    Ok(PySynthInstance { inner: synth::generate(&cfg).map_err(py_err)? })
}

/// Fitted hyperparameters with the posterior draws used for prediction.
#[pyclass(name = "FitResult", module = "ebmc", frozen)]
pub struct PyFitResult {
    inner: FitResult,
    y: BinaryObservationMatrix,
}

impl PyFitResult {
    fn samples(&self) -> &PosteriorSampleSet {
        self.inner.final_samples.as_ref().expect("fit keeps its draws")
    }
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.inner.hp_hat.mu.iter().copied().collect()
    }

    #[getter]
    fn sigma(&self) -> Vec<Vec<f64>> {
        rows_of_na(&self.inner.hp_hat.sigma)
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.samples().len()
    }

    /// One dict per EM iteration: `iteration`, `loglik_mean`,
    /// `loglik_stderr`, `mu`, `sigma`.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("iteration", e.iteration)?;
                d.set_item("loglik_mean", e.loglik_mean)?;
                d.set_item("loglik_stderr", e.loglik_stderr)?;
                d.set_item("mu", e.hyperparams.mu.iter().copied().collect::<Vec<f64>>())?;
                d.set_item("sigma", rows_of_na(&e.hyperparams.sigma))?;
                Ok(d)
            })
            .collect()
    }

    /// Marginal predictive probabilities. Without `cells`, every
    /// unobserved cell is predicted. Returns `(cells, probs)`.
    #[pyo3(signature = (cells=None, allow_observed=false))]
    fn predict(
        &self,
        cells: Option<Vec<(usize, usize)>>,
        allow_observed: bool,
    ) -> PyResult<(Vec<(usize, usize)>, Vec<f64>)> {
        let table = ebmc_core::predict_all_unobserved(self.samples(), &self.y, cells.as_deref(), allow_observed)
            .map_err(py_err)?;
        Ok((table.cells, table.probs))
    }

    fn predict_marginal(&self, i: usize, j: usize) -> PyResult<f64> {
        ebmc_core::predict_marginal(self.samples(), (i, j)).map_err(py_err)
    }

    /// Probability that `cells` take the values in `pattern` jointly.
    fn predict_joint(&self, cells: Vec<(usize, usize)>, pattern: Vec<u8>) -> PyResult<f64> {
        ebmc_core::predict_joint(self.samples(), &cells, &pattern).map_err(py_err)
    }
}

/// Monte Carlo EM fit. `variant` is "eb1" or "eb2"; `init` is
/// "column_moments" or "zero"; `rng_mode` is "sequential" or "substream".
#[pyfunction]
#[pyo3(signature = (
    y, variant="eb1", n_samples=100, n_iters=20, burn_in_first=50, burn_in_warm=10, seed=0,
    init="column_moments", reuse_last_estep=false, track_loglik=true, rng_mode="sequential"
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    y: PyRef<'_, PyObservationMatrix>,
    variant: &str,
    n_samples: usize,
    n_iters: usize,
    burn_in_first: usize,
    burn_in_warm: usize,
    seed: u64,
    init: &str,
    reuse_last_estep: bool,
    track_loglik: bool,
    rng_mode: &str,
) -> PyResult<PyFitResult> {
    let cfg = McemConfig {
        n_samples,
        n_iters,
        burn_in_first,
        burn_in_warm,
        seed,
        variant: variant.parse::<Variant>().map_err(py_err)?,
        rng_mode: rng_mode.parse::<RngMode>().map_err(PyValueError::new_err)?,
        reuse_last_estep,
        track_loglik,
        init: init.parse::<InitMode>().map_err(py_err)?,
    };
    let data = y.inner.clone();
    let inner = py.detach(|| ebmc_core::fit(&data, &cfg)).map_err(py_err)?;
    Ok(PyFitResult { inner, y: data })
}

#[pyfunction]
fn link_eval(m: f64) -> PyResult<f64> {
    ebmc_core::link_eval(m).map_err(py_err)
}

#[pyfunction]
fn kl_divergence_avg(true_probs: Vec<f64>, pred_probs: Vec<f64>) -> PyResult<f64> {
    metrics::kl_divergence_avg(&true_probs, &pred_probs).map_err(py_err)
}

#[pyfunction]
fn hellinger_avg(true_probs: Vec<f64>, pred_probs: Vec<f64>) -> PyResult<f64> {
    metrics::hellinger_avg(&true_probs, &pred_probs).map_err(py_err)
}

#[pyfunction]
fn accuracy(pred_probs: Vec<f64>, outcomes: Vec<u8>) -> PyResult<f64> {
    metrics::accuracy(&pred_probs, &outcomes).map_err(py_err)
}

#[pyfunction]
fn cross_entropy(pred_probs: Vec<f64>, outcomes: Vec<u8>) -> PyResult<f64> {
    metrics::cross_entropy(&pred_probs, &outcomes).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (pred_probs, outcomes, k_bins=metrics::DEFAULT_BINS))]
fn ece(pred_probs: Vec<f64>, outcomes: Vec<u8>, k_bins: usize) -> PyResult<f64> {
    let bins = metrics::reliability_bins(&pred_probs, &outcomes, k_bins).map_err(py_err)?;
    metrics::ece(&bins, outcomes.len()).map_err(py_err)
}

/// One dict per bin: `index`, `lower`, `upper`, `count`, `pred_mean`,
/// `empirical_freq` (the means are `None` for empty bins).
#[pyfunction]
#[pyo3(signature = (pred_probs, outcomes, k_bins=metrics::DEFAULT_BINS))]
fn reliability_bins<'py>(
    py: Python<'py>,
    pred_probs: Vec<f64>,
    outcomes: Vec<u8>,
    k_bins: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let bins = metrics::reliability_bins(&pred_probs, &outcomes, k_bins).map_err(py_err)?;
    bins.bins
        .iter()
        .map(|b| {
            let d = PyDict::new(py);
            d.set_item("index", b.index)?;
            d.set_item("lower", b.lower)?;
            d.set_item("upper", b.upper)?;
            d.set_item("count", b.count)?;
            d.set_item("pred_mean", b.pred_mean)?;
            d.set_item("empirical_freq", b.empirical_freq)?;
            Ok(d)
        })
        .collect()
}

fn gaussian_obs(y: &[Vec<f64>]) -> PyResult<GaussianMatrixObservation> {
    GaussianMatrixObservation::new(na_of_rows(y)?).map_err(py_err)
}

/// `Y (I - (p - q - 1)(Y^T Y)^{-1})` for a `p x q` list of rows.
#[pyfunction]
fn efron_morris_estimate(y: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let est = efron_morris::efron_morris_estimate(&gaussian_obs(&y)?).map_err(py_err)?;
    Ok(rows_of_na(&est))
}

/// Moment estimate of the row covariance: `(sigma, min_eigenvalue)`.
#[pyfunction]
fn moment_match_sigma(y: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let est = efron_morris::moment_match_sigma(&gaussian_obs(&y)?).map_err(py_err)?;
    Ok((rows_of_na(&est.sigma), est.min_eigenvalue))
}

#[pyfunction]
fn bayes_estimate_given_sigma(y: Vec<Vec<f64>>, sigma: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let est = efron_morris::bayes_estimate_given_sigma(&gaussian_obs(&y)?, &na_of_rows(&sigma)?).map_err(py_err)?;
    Ok(rows_of_na(&est))
}

fn open(path: &str) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
}

/// MovieLens 100K `u.data`: returns `(matrix, movie_ids, user_ids)`.
#[pyfunction]
fn load_movielens(path: &str) -> PyResult<(PyObservationMatrix, Vec<u64>, Vec<u64>)> {
    let data = datasets::load_movielens(open(path)?).map_err(py_err)?;
    Ok((PyObservationMatrix { inner: data.y }, data.movie_ids, data.user_ids))
}

#[pyfunction]
fn load_jester(path: &str) -> PyResult<PyObservationMatrix> {
    Ok(PyObservationMatrix { inner: datasets::load_jester(open(path)?).map_err(py_err)? })
}

#[pymodule]
fn ebmc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObservationMatrix>()?;
    m.add_class::<PySynthInstance>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(link_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence_avg, m)?)?;
    m.add_function(wrap_pyfunction!(hellinger_avg, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(cross_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ece, m)?)?;
    m.add_function(wrap_pyfunction!(reliability_bins, m)?)?;
    m.add_function(wrap_pyfunction!(efron_morris_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(moment_match_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_estimate_given_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(load_movielens, m)?)?;
    m.add_function(wrap_pyfunction!(load_jester, m)?)?;
    Ok(())
}
