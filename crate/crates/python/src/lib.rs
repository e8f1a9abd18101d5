//! Python-facing wrappers around the clustering library: dataset loading
//! and generation, the solver entry point, and the label-agreement metrics.
//!
//! The compiled module is importable as `omvcdr_py`; see
//! `python/smoke_test.py` at the workspace root for an end-to-end example.

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use omvcdr::dataset::{self, DatasetError, MultiViewDataset, SyntheticSpec};
use omvcdr::metrics::{self, LabelPair};
use omvcdr::solver::{self, SolverConfig, Variant};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dataset_error(e: DatasetError) -> PyErr {
    match e {
        DatasetError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Immutable multi-view dataset: one feature matrix per view over a shared
/// set of samples, with optional ground-truth labels.
#[pyclass(frozen, module = "omvcdr_py")]
pub struct Dataset {
    inner: MultiViewDataset,
}

#[pymethods]
impl Dataset {
    #[getter]
    fn sample_count(&self) -> usize {
        self.inner.sample_count()
    }

    #[getter]
    fn view_count(&self) -> usize {
        self.inner.view_count()
    }

    /// Feature dimension of each view, in view order.
    #[getter]
    fn view_dims(&self) -> Vec<usize> {
        self.inner.view_dims()
    }

    /// Ground-truth labels, or `None` for unlabeled data.
    #[getter]
    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(<[usize]>::to_vec)
    }

    /// One view as a list of feature rows (each of length `sample_count`).
    fn view(&self, index: usize) -> PyResult<Vec<Vec<f64>>> {
        if index >= self.inner.view_count() {
            return Err(PyIndexError::new_err(format!(
                "view {index} out of range for {} views",
                self.inner.view_count()
            )));
        }
        let matrix = self.inner.view(index);
        Ok((0..matrix.rows())
            .map(|r| (0..matrix.cols()).map(|c| matrix.get(r, c)).collect())
            .collect())
    }

    /// A copy with every feature standardized to mean 0 and unit variance
    /// (near-constant features are only centered).
    fn normalized(&self) -> Dataset {
        Dataset {
            inner: dataset::zscore_normalize(&self.inner),
        }
    }

    /// Write the dataset under `directory` and return the manifest path.
    fn save(&self, directory: &str) -> PyResult<String> {
        let manifest =
            dataset::save_dataset(&self.inner, directory.as_ref()).map_err(dataset_error)?;
        Ok(manifest.display().to_string())
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(samples={}, view_dims={:?}, labeled={})",
            self.inner.sample_count(),
            self.inner.view_dims(),
            self.inner.labels().is_some()
        )
    }
}

/// Result of one solver run.
#[pyclass(frozen, module = "omvcdr_py")]
pub struct FitOutcome {
    /// Cluster index per sample.
    #[pyo3(get)]
    pub labels: Vec<usize>,
    /// Final simplex weight of each latent space.
    #[pyo3(get)]
    pub weights: Vec<f64>,
    /// Objective value at initialization and after each outer iteration.
    #[pyo3(get)]
    pub objective_trace: Vec<f64>,
    #[pyo3(get)]
    pub iterations: usize,
    #[pyo3(get)]
    pub converged: bool,
    /// True when every latent space collapsed and weights fell back to
    /// uniform over the collapsed ones.
    #[pyo3(get)]
    pub degenerate_weights: bool,
    /// Dimension of each latent space after defaulting and capping.
    #[pyo3(get)]
    pub latent_dims: Vec<usize>,
}

#[pymethods]
impl FitOutcome {
    fn __repr__(&self) -> String {
        format!(
            "FitOutcome(iterations={}, converged={}, objective={:.6})",
            self.iterations,
            self.converged,
            self.objective_trace.last().copied().unwrap_or(f64::NAN)
        )
    }
}

/// Generate labeled synthetic data: well-separated latent centroids pushed
/// through a random orthonormal map per view, plus Gaussian noise.
#[pyfunction]
#[pyo3(signature = (n, k, view_dims, separation=10.0, noise_sigma=0.5, seed=0))]
fn generate_synthetic(
    n: usize,
    k: usize,
    view_dims: Vec<usize>,
    separation: f64,
    noise_sigma: f64,
    seed: u64,
) -> PyResult<Dataset> {
    let inner = dataset::generate_synthetic(&SyntheticSpec {
        n,
        k,
        view_dims,
        separation,
        noise_sigma,
        seed,
    })
    .map_err(dataset_error)?;
    Ok(Dataset { inner })
}

/// Load a dataset from a manifest file (see the CLI's `synth` output for
/// the on-disk layout).
#[pyfunction]
fn load_dataset(path: &str) -> PyResult<Dataset> {
    let inner = dataset::load_dataset(path.as_ref()).map_err(dataset_error)?;
    Ok(Dataset { inner })
}

/// Cluster a dataset into `k` groups.
///
/// `lambda_` trades reconstruction against the clustering penalty, `m` is
/// the number of latent spaces, and `dims` overrides their default
/// dimensions. `variant` is one of "full", "omvc", "omvcdr2", or
/// "equal_alpha". `tol = 0` disables early stopping.
#[pyfunction]
#[pyo3(signature = (dataset, k, lambda_=1.0, m=3, dims=None, variant="full",
                    max_iters=100, tol=1e-6, seed=0))]
#[allow(clippy::too_many_arguments)]
fn fit(
    dataset: &Dataset,
    k: usize,
    lambda_: f64,
    m: usize,
    dims: Option<Vec<usize>>,
    variant: &str,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> PyResult<FitOutcome> {
    let variant: Variant = variant.parse().map_err(value_error)?;
    let config = SolverConfig {
        k,
        m,
        latent_dims: dims.unwrap_or_default(),
        lambda: lambda_,
        max_iters,
        rel_tol: tol,
        seed,
    };
    let result = solver::fit(&dataset.inner, &config, variant).map_err(value_error)?;
    Ok(FitOutcome {
        labels: result.partition.labels().to_vec(),
        weights: result.weights.alpha.clone(),
        objective_trace: result.objective_trace,
        iterations: result.iterations_run,
        converged: result.converged,
        degenerate_weights: result.degenerate_weights,
        latent_dims: result
            .embeddings
            .embeddings
            .iter()
            .map(omvcdr::linalg::MatrixD::rows)
            .collect(),
    })
}

fn label_pair(truth: Vec<usize>, predicted: Vec<usize>) -> PyResult<LabelPair> {
    LabelPair::new(truth, predicted).map_err(value_error)
}

/// Clustering accuracy under the best cluster-to-class matching.
#[pyfunction]
fn accuracy(truth: Vec<usize>, predicted: Vec<usize>) -> PyResult<f64> {
    Ok(metrics::accuracy(&label_pair(truth, predicted)?))
}

/// Normalized mutual information in [0, 1].
#[pyfunction]
fn nmi(truth: Vec<usize>, predicted: Vec<usize>) -> PyResult<f64> {
    Ok(metrics::nmi(&label_pair(truth, predicted)?))
}

/// Fraction of samples in their cluster's majority class.
#[pyfunction]
fn purity(truth: Vec<usize>, predicted: Vec<usize>) -> PyResult<f64> {
    Ok(metrics::purity(&label_pair(truth, predicted)?))
}

/// Pair-counting F-score.
#[pyfunction]
fn fscore(truth: Vec<usize>, predicted: Vec<usize>) -> PyResult<f64> {
    Ok(metrics::fscore(&label_pair(truth, predicted)?))
}

#[pymodule]
fn omvcdr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<FitOutcome>()?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(purity, m)?)?;
    m.add_function(wrap_pyfunction!(fscore, m)?)?;
    Ok(())
}
