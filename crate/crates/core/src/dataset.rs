//! Multi-view dataset ingest, synthesis, and preprocessing.
//!
//! A dataset is `V` feature matrices over the same `n` samples, one matrix per
//! view, with optional ground-truth labels. On disk it is a small manifest
//! (TOML key/value file) pointing at one numeric CSV per view: `d_v` rows by
//! `n` comma-separated columns, no header, plus an optional labels file with
//! one 0-based integer per line.

use std::fs;
use std::io::{self, BufWriter, Write as _};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, LinalgError, MatrixD};

/// Feature rows whose standard deviation falls below this are treated as
/// constant by [`zscore_normalize`] and only mean-centered.
pub const MIN_FEATURE_STD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("view {view} has {found} samples (columns), expected {expected}")]
    SampleCountMismatch {
        view: usize,
        expected: usize,
        found: usize,
    },
    #[error("view {view} is empty")]
    EmptyView { view: usize },
    #[error("view {view}, row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        view: usize,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("view {view}, row {row}, column {col}: cannot parse {cell:?} as a number")]
    NonNumericCell {
        view: usize,
        row: usize,
        col: usize,
        cell: String,
    },
    #[error("labels line {line}: cannot parse {cell:?} as a 0-based class index")]
    BadLabel { line: usize, cell: String },
    #[error("labels file has {found} entries, expected {expected}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("class {class} has no samples (labels must cover 0..k contiguously)")]
    EmptyClass { class: usize },
    #[error("dataset has no views")]
    NoViews,
    #[error("invalid synthetic spec: {message}")]
    BadSpec { message: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `V` per-view feature matrices `X^(v)` of shape `d_v x n` over the same `n`
/// samples, with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<MatrixD>,
    n: usize,
    labels: Option<Vec<usize>>,
}

impl MultiViewDataset {
    /// Validates the shape invariants: at least one view, all views sharing
    /// `n >= 1` columns, and labels (if any) covering `0..k` with every class
    /// nonempty.
    pub fn new(views: Vec<MatrixD>, labels: Option<Vec<usize>>) -> Result<Self, DatasetError> {
        let n = views.first().ok_or(DatasetError::NoViews)?.cols();
        for (v, x) in views.iter().enumerate() {
            if x.rows() == 0 || x.cols() == 0 {
                return Err(DatasetError::EmptyView { view: v });
            }
            if x.cols() != n {
                return Err(DatasetError::SampleCountMismatch {
                    view: v,
                    expected: n,
                    found: x.cols(),
                });
            }
        }
        if let Some(y) = &labels {
            if y.len() != n {
                return Err(DatasetError::LabelCountMismatch {
                    expected: n,
                    found: y.len(),
                });
            }
            validate_classes(y)?;
        }
        Ok(Self { views, n, labels })
    }

    pub fn views(&self) -> &[MatrixD] {
        &self.views
    }

    pub fn view(&self, v: usize) -> &MatrixD {
        &self.views[v]
    }

    pub fn view_count(&self) -> usize {
        self.views.len()
    }

    /// Sample count `n`.
    pub fn sample_count(&self) -> usize {
        self.n
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.rows()).collect()
    }

    /// Smallest per-view feature dimension; latent dimensions cannot exceed it.
    pub fn min_view_dim(&self) -> usize {
        self.views.iter().map(|x| x.rows()).min().unwrap_or(0)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of ground-truth classes, if labels are present.
    pub fn class_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|y| y.iter().max().map_or(0, |&m| m + 1))
    }
}

fn validate_classes(labels: &[usize]) -> Result<(), DatasetError> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut seen = vec![false; k];
    for &y in labels {
        seen[y] = true;
    }
    if let Some(class) = seen.iter().position(|&s| !s) {
        return Err(DatasetError::EmptyClass { class });
    }
    Ok(())
}

/// Parameters for [`generate_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Sample count.
    pub n: usize,
    /// Cluster count.
    pub k: usize,
    /// Feature dimension of each view.
    pub view_dims: Vec<usize>,
    /// Minimum inter-centroid distance in the latent space.
    pub separation: f64,
    /// Standard deviation of the per-view additive Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DatasetError> {
        if self.k < 2 {
            return Err(DatasetError::BadSpec {
                message: format!("k = {} but at least 2 clusters are required", self.k),
            });
        }
        if self.n < self.k {
            return Err(DatasetError::BadSpec {
                message: format!("n = {} is smaller than k = {}", self.n, self.k),
            });
        }
        if self.view_dims.is_empty() {
            return Err(DatasetError::BadSpec {
                message: "view_dims is empty".into(),
            });
        }
        if self.view_dims.contains(&0) {
            return Err(DatasetError::BadSpec {
                message: "every view dimension must be at least 1".into(),
            });
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(DatasetError::BadSpec {
                message: format!("separation = {} must be finite and >= 0", self.separation),
            });
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return Err(DatasetError::BadSpec {
                message: format!("noise_sigma = {} must be finite and > 0", self.noise_sigma),
            });
        }
        Ok(())
    }
}

/// TOML manifest schema: sample count, ordered view CSV paths, optional
/// labels CSV path, all relative to the manifest's directory.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n: usize,
    views: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<String>,
}

/// Load a dataset from a manifest file. Views come back in manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<MultiViewDataset, DatasetError> {
    let text = fs::read_to_string(manifest_path).map_err(|source| DatasetError::Io {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| DatasetError::Manifest {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    if manifest.views.is_empty() {
        return Err(DatasetError::Manifest {
            path: manifest_path.to_path_buf(),
            message: "manifest lists no views".into(),
        });
    }
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut views = Vec::with_capacity(manifest.views.len());
    for (v, rel) in manifest.views.iter().enumerate() {
        views.push(read_view_csv(&base.join(rel), v, manifest.n)?);
    }
    let labels = match &manifest.labels {
        Some(rel) => Some(read_labels_csv(&base.join(rel))?),
        None => None,
    };
    MultiViewDataset::new(views, labels)
}

fn read_view_csv(path: &Path, view: usize, expected_n: usize) -> Result<MatrixD, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(expected_n);
        for (c, cell) in line.split(',').enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| DatasetError::NonNumericCell {
                view,
                row: r,
                col: c,
                cell: cell.trim().to_string(),
            })?;
            row.push(value);
        }
        if row.len() != expected_n {
            // A consistent-width CSV with the wrong width is a sample-count
            // mismatch; a width change mid-file is a ragged row.
            if r > 0 && rows[0].len() != row.len() {
                return Err(DatasetError::RaggedRow {
                    view,
                    row: r,
                    expected: rows[0].len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyView { view });
    }
    let found = rows[0].len();
    if found != expected_n {
        return Err(DatasetError::SampleCountMismatch {
            view,
            expected: expected_n,
            found,
        });
    }
    Ok(MatrixD::from_rows(&rows)?)
}

fn read_labels_csv(path: &Path) -> Result<Vec<usize>, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut labels = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: usize = trimmed.parse().map_err(|_| DatasetError::BadLabel {
            line: line_no,
            cell: trimmed.to_string(),
        })?;
        labels.push(value);
    }
    Ok(labels)
}

/// Write `dataset` under `dir` as `manifest.toml`, `view_<v>.csv`, and
/// (when labels exist) `labels.csv`. Returns the manifest path.
///
/// Floats are written in shortest round-trip form, so
/// `load_dataset(save_dataset(d)) == d` bit-exactly.
pub fn save_dataset(dataset: &MultiViewDataset, dir: &Path) -> Result<PathBuf, DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: io::Error| DatasetError::Io { path, source }
    };

    let mut view_names = Vec::with_capacity(dataset.view_count());
    for (v, x) in dataset.views().iter().enumerate() {
        let name = format!("view_{v}.csv");
        let path = dir.join(&name);
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        (|| -> io::Result<()> {
            for r in 0..x.rows() {
                for c in 0..x.cols() {
                    if c > 0 {
                        w.write_all(b",")?;
                    }
                    write!(w, "{}", x.get(r, c))?;
                }
                w.write_all(b"\n")?;
            }
            w.flush()
        })()
        .map_err(io_err(&path))?;
        view_names.push(name);
    }

    let labels_name = match dataset.labels() {
        Some(labels) => {
            let name = "labels.csv".to_string();
            let path = dir.join(&name);
            let mut text = String::with_capacity(labels.len() * 2);
            for &y in labels {
                text.push_str(&y.to_string());
                text.push('\n');
            }
            fs::write(&path, text).map_err(io_err(&path))?;
            Some(name)
        }
        None => None,
    };

    let manifest = Manifest {
        n: dataset.sample_count(),
        views: view_names,
        labels: labels_name,
    };
    let manifest_path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serialization cannot fail");
    fs::write(&manifest_path, text).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}

/// Standardize every feature row of every view to mean 0 and population
/// standard deviation 1. Rows with std below [`MIN_FEATURE_STD`] are only
/// mean-centered. Labels and sample count are unchanged.
pub fn zscore_normalize(dataset: &MultiViewDataset) -> MultiViewDataset {
    let n = dataset.sample_count() as f64;
    let views = dataset
        .views()
        .iter()
        .map(|x| {
            let mut out = x.clone();
            for r in 0..x.rows() {
                let mean = (0..x.cols()).map(|c| x.get(r, c)).sum::<f64>() / n;
                let var = (0..x.cols())
                    .map(|c| {
                        let d = x.get(r, c) - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / n;
                let std = var.sqrt();
                let scale = if std < MIN_FEATURE_STD { 1.0 } else { 1.0 / std };
                for c in 0..x.cols() {
                    out.set(r, c, (x.get(r, c) - mean) * scale);
                }
            }
            out
        })
        .collect();
    MultiViewDataset {
        views,
        n: dataset.sample_count(),
        labels: dataset.labels.clone(),
    }
}

/// Vertical concatenation `[X^(1); ...; X^(V)]`, shape `(sum d_v) x n`,
/// row blocks in view order. Used to initialize the partition by single-view
/// clustering on the stacked features.
pub fn concat_views(dataset: &MultiViewDataset) -> MatrixD {
    let total_rows: usize = dataset.views().iter().map(|x| x.rows()).sum();
    let n = dataset.sample_count();
    let mut out = MatrixD::zeros(total_rows, n);
    for c in 0..n {
        let col = out.column_mut(c);
        let mut offset = 0;
        for x in dataset.views() {
            let src = x.column(c);
            col[offset..offset + src.len()].copy_from_slice(src);
            offset += src.len();
        }
    }
    out
}

/// Generate clustered multi-view data with known labels.
///
/// `k` latent centroids are placed pairwise `separation` apart (a scaled
/// simplex in `R^k`), samples are assigned round-robin, and each view applies
/// its own random orthonormal-row linear map to the latent points before
/// adding `N(0, noise_sigma^2)` noise. Pure function of the spec, including
/// the seed.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<MultiViewDataset, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    let latent_dim = spec.k;

    // Scaled standard basis: |s·e_i - s·e_j| = s·sqrt(2), so the scale below
    // makes every centroid pair exactly `separation` apart.
    let scale = spec.separation / std::f64::consts::SQRT_2;
    let labels: Vec<usize> = (0..spec.n).map(|i| i % spec.k).collect();

    let mut views = Vec::with_capacity(spec.view_dims.len());
    for &d in &spec.view_dims {
        let map = random_orthonormal_map(&mut rng, d, latent_dim);
        let mut x = MatrixD::zeros(d, spec.n);
        for (i, &y) in labels.iter().enumerate() {
            let col = x.column_mut(i);
            // Latent point of sample i is its centroid scale·e_y, so the
            // mapped point is just column y of the map, scaled.
            let centroid_image = map.column(y);
            for (r, out) in col.iter_mut().enumerate() {
                *out = scale * centroid_image[r] + noise.sample(&mut rng);
            }
        }
        views.push(x);
    }
    MultiViewDataset::new(views, Some(labels))
}

/// Random `rows x cols` map that preserves latent geometry as well as the
/// shape allows: orthonormal columns when `rows >= cols` (an isometry),
/// orthonormal rows otherwise (a projection).
fn random_orthonormal_map(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatrixD {
    if rows >= cols {
        random_orthonormal_columns(rng, rows, cols)
    } else {
        random_orthonormal_columns(rng, cols, rows).transpose()
    }
}

fn random_orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatrixD {
    debug_assert!(rows >= cols);
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let mut m = MatrixD::zeros(rows, cols);
    for j in 0..cols {
        // Draw, orthogonalize against previous columns (twice, for numerical
        // hygiene), and redraw in the measure-zero degenerate case.
        loop {
            let mut col: Vec<f64> = (0..rows).map(|_| standard.sample(rng)).collect();
            for _ in 0..2 {
                for p in 0..j {
                    let prev = m.column(p);
                    let proj = dot(&col, prev);
                    for (x, &y) in col.iter_mut().zip(prev) {
                        *x -= proj * y;
                    }
                }
            }
            let norm = dot(&col, &col).sqrt();
            if norm > 1e-8 {
                for x in &mut col {
                    *x /= norm;
                }
                m.column_mut(j).copy_from_slice(&col);
                break;
            }
        }
    }
    m
}
