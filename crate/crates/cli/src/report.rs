//! The machine-readable run report: one JSON document per fit, plus helpers
//! for the CSV summaries emitted by grid and ablation runs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use omvcdr::dataset::MultiViewDataset;
use omvcdr::metrics::{accuracy, fscore, nmi, purity, LabelPair};
use omvcdr::solver::FitResult;

/// Version of the report layout; bump on breaking changes.
pub const REPORT_SCHEMA: u32 = 1;

/// Everything a downstream script needs to interpret one fit. Serialized as
/// pretty JSON; byte-identical across reruns except for `wall_time_seconds`.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    /// Content hash of the dataset the fit actually saw (after any
    /// normalization), independent of file paths.
    pub dataset_id: String,
    pub variant: String,
    pub config: ConfigEcho,
    /// Present only when the dataset carries ground-truth labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate_weights: bool,
    pub wall_time_seconds: f64,
    pub seed: u64,
}

/// The hyper-parameters as resolved for the run (latent dimensions are the
/// concrete per-space values, not the "use defaults" marker).
#[derive(Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub k: usize,
    pub m: usize,
    pub latent_dims: Vec<usize>,
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    pub fscore: f64,
}

impl MetricsReport {
    /// All four scores against ground truth, or `None` without labels.
    pub fn evaluate(dataset: &MultiViewDataset, result: &FitResult) -> Option<Self> {
        let truth = dataset.labels()?;
        let pair = LabelPair::new(truth.to_vec(), result.partition.labels().to_vec())
            .expect("solver partitions are valid label vectors");
        Some(Self {
            acc: accuracy(&pair),
            nmi: nmi(&pair),
            purity: purity(&pair),
            fscore: fscore(&pair),
        })
    }
}

/// SHA-256 over the dataset's shape and raw values (dimensions, IEEE-754
/// bits, labels), so any content change — but no mere relocation — changes
/// the id.
pub fn dataset_id(dataset: &MultiViewDataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((dataset.view_count() as u64).to_le_bytes());
    for view in dataset.views() {
        hasher.update((view.rows() as u64).to_le_bytes());
        hasher.update((view.cols() as u64).to_le_bytes());
        for value in view.data() {
            hasher.update(value.to_bits().to_le_bytes());
        }
    }
    match dataset.labels() {
        Some(labels) => {
            hasher.update([1u8]);
            for &label in labels {
                hasher.update((label as u64).to_le_bytes());
            }
        }
        None => hasher.update([0u8]),
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// One CSV line of the fields shared by grid and ablation summaries.
    /// Metric cells are empty when no ground truth was available.
    pub fn summary_cells(&self) -> String {
        let final_objective = self
            .objective_trace
            .last()
            .map_or(String::new(), |v| v.to_string());
        let metric = |f: fn(&MetricsReport) -> f64| {
            self.metrics.as_ref().map_or(String::new(), |m| f(m).to_string())
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.iterations,
            self.converged,
            final_objective,
            metric(|m| m.acc),
            metric(|m| m.nmi),
            metric(|m| m.purity),
            metric(|m| m.fscore),
        )
    }
}

/// Header matching [`RunReport::summary_cells`].
pub const SUMMARY_CELL_HEADER: &str = "iterations,converged,objective,acc,nmi,purity,fscore";
