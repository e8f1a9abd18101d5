//! The alternating optimization at the heart of the crate.
//!
//! The objective couples per-view reconstruction with a partition-aware
//! embedding penalty:
//!
//! ```text
//! min  Σ_p Σ_v |X^(v) − H_p^(v) Z_p|_F²  +  (λ/2)·Σ_p α_p² Σ_c Σ_{i,j ∈ A_c} |z_p^i − z_p^j|²
//! s.t. H_p^(v)ᵀ H_p^(v) = I,  hard k-partition {A_c},  α on the simplex
//! ```
//!
//! Each outer iteration updates, in order: the embeddings `Z_p` (exact
//! per-column Gauss–Seidel sweep), the bases `H_p^(v)` (orthogonal Procrustes
//! via thin SVD), the partition (sequential remove–score–reassign sweep), and
//! the space weights `α` (closed form). Every step solves its subproblem
//! exactly, so the objective never increases; this is asserted at runtime.
//!
//! The within-cluster pair sum is never materialized as an n×n distance
//! matrix. Per-cluster running sums `t_p^c = Σ_{j∈A_c} z_p^j` and
//! `v_p^c = Σ_{j∈A_c} |z_p^j|²` reduce it to the identity
//! `Σ_{i,j∈A_c} |z_i − z_j|² = 2(|A_c|·v_c − |t_c|²)`, keeping every sweep
//! linear in `n`.

mod kmeans;

pub use kmeans::kmeans_lloyd;

use thiserror::Error;

use crate::dataset::{concat_views, MultiViewDataset};
use crate::linalg::{dot, matmul, matmul_a_bt, matmul_at_b, thin_svd, LinalgError, MatrixD};

/// Latent-space scatters below this are treated as exactly zero by the
/// weight update (the closed form would divide by them).
pub const DEGENERATE_SCATTER: f64 = 1e-12;
/// Absolute slack, scaled by `1 + |objective|`, allowed in the monotone
/// descent assertions.
pub const MONOTONE_SLACK: f64 = 1e-8;
/// Cluster sums are recomputed from scratch every this many outer iterations
/// to bound incremental floating-point drift.
const REFRESH_PERIOD: usize = 10;
/// Attempts at k-means initialization before giving up.
const MAX_INIT_RESEEDS: u64 = 10;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {message}")]
    InvalidConfig { message: String },
    #[error("{n} samples cannot form {k} nonempty clusters")]
    TooFewSamples { n: usize, k: usize },
    #[error("k-means could not produce k nonempty clusters")]
    KmeansDegenerate,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Hyper-parameters of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Cluster count.
    pub k: usize,
    /// Number of latent spaces.
    pub m: usize,
    /// Latent dimensions `d_1..d_m`. Leave empty to use the default
    /// `d_p = p·k`, capped at the smallest view dimension.
    pub latent_dims: Vec<usize>,
    /// Trade-off between reconstruction and the within-cluster penalty.
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop when the relative objective change drops below this; `0.0`
    /// disables early stopping (fixed-iteration mode).
    pub rel_tol: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(k: usize, lambda: f64) -> Self {
        Self {
            k,
            m: 3,
            latent_dims: Vec::new(),
            lambda,
            max_iters: 100,
            rel_tol: 1e-6,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        let fail = |message: String| Err(SolverError::InvalidConfig { message });
        if self.k < 2 {
            return fail(format!("k = {} but at least 2 clusters are required", self.k));
        }
        if self.m < 1 {
            return fail("m must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda = {} must be finite and > 0", self.lambda));
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return fail(format!("rel_tol = {} must be finite and >= 0", self.rel_tol));
        }
        Ok(())
    }

    /// The latent dimensions a fit will actually use against a dataset whose
    /// smallest view has `min_view_dim` features. Defaults are capped at
    /// `min_view_dim` (reported by the second return), explicit dimensions
    /// that exceed it are an error: the orthonormal-column constraint on a
    /// `d_v × d_p` basis needs `d_p ≤ d_v`.
    pub fn resolve_latent_dims(&self, min_view_dim: usize) -> Result<(Vec<usize>, bool), SolverError> {
        self.validate()?;
        if min_view_dim == 0 {
            return Err(SolverError::InvalidConfig {
                message: "dataset has a zero-dimensional view".into(),
            });
        }
        if self.latent_dims.is_empty() {
            let mut capped = false;
            let dims = (1..=self.m)
                .map(|p| {
                    let ideal = p * self.k;
                    if ideal > min_view_dim {
                        capped = true;
                        min_view_dim
                    } else {
                        ideal
                    }
                })
                .collect();
            return Ok((dims, capped));
        }
        if self.latent_dims.len() != self.m {
            return Err(SolverError::InvalidConfig {
                message: format!(
                    "{} latent dimensions given for m = {} spaces",
                    self.latent_dims.len(),
                    self.m
                ),
            });
        }
        for (p, &d) in self.latent_dims.iter().enumerate() {
            if d == 0 {
                return Err(SolverError::InvalidConfig {
                    message: format!("latent dimension {} (space {}) must be positive", d, p + 1),
                });
            }
            if d > min_view_dim {
                return Err(SolverError::InvalidConfig {
                    message: format!(
                        "latent dimension {} (space {}) exceeds the smallest view dimension {}",
                        d,
                        p + 1,
                        min_view_dim
                    ),
                });
            }
        }
        Ok((self.latent_dims.clone(), false))
    }
}

/// Ablation variants: the full method, a single latent space, two latent
/// spaces, or fixed uniform space weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    /// One latent space (`m = 1`).
    Omvc,
    /// Two latent spaces (`m = 2`).
    Omvcdr2,
    /// All `m` spaces but `α` frozen at `1/m`.
    EqualAlpha,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::Omvc,
        Variant::Omvcdr2,
        Variant::EqualAlpha,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Omvc => "omvc",
            Variant::Omvcdr2 => "omvcdr2",
            Variant::EqualAlpha => "equal_alpha",
        }
    }

    /// The configuration the variant actually runs: space-count overrides
    /// are applied here, explicit latent dimensions are truncated to match.
    pub fn effective_config(&self, config: &SolverConfig) -> Result<SolverConfig, SolverError> {
        let forced_m = match self {
            Variant::Omvc => Some(1),
            Variant::Omvcdr2 => Some(2),
            Variant::Full | Variant::EqualAlpha => None,
        };
        let mut effective = config.clone();
        if let Some(m) = forced_m {
            if !effective.latent_dims.is_empty() {
                if effective.latent_dims.len() < m {
                    return Err(SolverError::InvalidConfig {
                        message: format!(
                            "variant {} needs {} latent dimensions, {} given",
                            self.name(),
                            m,
                            effective.latent_dims.len()
                        ),
                    });
                }
                effective.latent_dims.truncate(m);
            }
            effective.m = m;
        }
        Ok(effective)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "omvc" => Ok(Variant::Omvc),
            "omvcdr2" => Ok(Variant::Omvcdr2),
            "equal_alpha" => Ok(Variant::EqualAlpha),
            other => Err(format!(
                "unknown variant {other:?} (expected full, omvc, omvcdr2, or equal_alpha)"
            )),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The per-view orthonormal bases `H_p^(v)`, indexed `[space][view]`, each of
/// shape `d_v × d_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub factors: Vec<Vec<MatrixD>>,
}

impl FactorSet {
    /// Largest deviation of any `H_p^(v)ᵀ H_p^(v)` from the identity.
    pub fn max_orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for per_view in &self.factors {
            for h in per_view {
                let gram = matmul_at_b(h, h).expect("same matrix");
                for j in 0..gram.cols() {
                    for i in 0..gram.rows() {
                        let target = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((gram.get(i, j) - target).abs());
                    }
                }
            }
        }
        worst
    }
}

/// The consensus embeddings `Z_p` (`d_p × n`, one column per sample) plus the
/// per-cluster running sums that keep the partition-penalty bookkeeping
/// linear: `cluster_vec_sums[p]` stores `t_p^c` as column `c`, and
/// `cluster_sq_sums[p][c]` is `v_p^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub embeddings: Vec<MatrixD>,
    pub cluster_vec_sums: Vec<MatrixD>,
    pub cluster_sq_sums: Vec<Vec<f64>>,
}

impl EmbeddingSet {
    /// Largest relative inconsistency between the running sums and a
    /// from-scratch recomputation.
    pub fn max_sum_drift(&self, partition: &Partition) -> f64 {
        let fresh = rebuild_cluster_sums(&self.embeddings, partition);
        let mut worst = 0.0f64;
        for (p, (vec_sums, sq_sums)) in self
            .cluster_vec_sums
            .iter()
            .zip(&self.cluster_sq_sums)
            .enumerate()
        {
            let rel = |stored: f64, exact: f64| (stored - exact).abs() / (1.0 + exact.abs());
            for (stored, exact) in vec_sums.data().iter().zip(fresh.0[p].data()) {
                worst = worst.max(rel(*stored, *exact));
            }
            for (stored, exact) in sq_sums.iter().zip(&fresh.1[p]) {
                worst = worst.max(rel(*stored, *exact));
            }
        }
        worst
    }
}

/// Hard assignment of the `n` samples to `k` nonempty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl Partition {
    /// Validates that labels lie in `0..k` and every cluster is nonempty.
    pub fn from_labels(labels: Vec<usize>, k: usize) -> Result<Self, SolverError> {
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            if c >= k {
                return Err(SolverError::InvalidConfig {
                    message: format!("label {c} at sample {i} is outside 0..{k}"),
                });
            }
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(SolverError::InvalidConfig {
                message: format!("cluster {empty} is empty"),
            });
        }
        Ok(Self { labels, counts })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }
}

/// Simplex weights over the latent spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub alpha: Vec<f64>,
}

impl Weights {
    pub fn uniform(m: usize) -> Self {
        Self {
            alpha: vec![1.0 / m as f64; m],
        }
    }
}

/// Everything the alternating steps read and write.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub factors: FactorSet,
    pub embeddings: EmbeddingSet,
    pub partition: Partition,
    pub weights: Weights,
    /// Latent dimensions in use (resolved from the config).
    pub latent_dims: Vec<usize>,
}

/// Outcome of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub partition: Partition,
    pub weights: Weights,
    pub factors: FactorSet,
    pub embeddings: EmbeddingSet,
    /// Objective value after each outer iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    /// Whether the relative-change stopping rule fired before `max_iters`.
    pub converged: bool,
    /// Whether any weight update hit the zero-scatter limiting rule.
    pub degenerate_weights: bool,
}

/// Build the starting state: identity-pattern bases, a k-means partition of
/// the stacked views, uniform weights, and embeddings from the closed-form
/// `Z_p = A_p / V` (the penalty-free limit of the embedding update).
pub fn init_state(
    dataset: &MultiViewDataset,
    config: &SolverConfig,
) -> Result<SolverState, SolverError> {
    let (latent_dims, _) = config.resolve_latent_dims(dataset.min_view_dim())?;
    let n = dataset.sample_count();
    if n < config.k {
        return Err(SolverError::TooFewSamples { n, k: config.k });
    }

    let factors = FactorSet {
        factors: latent_dims
            .iter()
            .map(|&d_p| {
                dataset
                    .views()
                    .iter()
                    .map(|x| MatrixD::eye_rect(x.rows(), d_p))
                    .collect()
            })
            .collect(),
    };

    let stacked = concat_views(dataset);
    let mut partition = None;
    let mut last_err = SolverError::KmeansDegenerate;
    for attempt in 0..MAX_INIT_RESEEDS {
        match kmeans_lloyd(&stacked, config.k, config.seed.wrapping_add(attempt)) {
            Ok(p) => {
                partition = Some(p);
                break;
            }
            Err(e @ SolverError::TooFewSamples { .. }) => return Err(e),
            Err(e) => last_err = e,
        }
    }
    let partition = partition.ok_or(last_err)?;

    let weights = Weights::uniform(latent_dims.len());

    let v_count = dataset.view_count() as f64;
    let embeddings: Vec<MatrixD> = factors
        .factors
        .iter()
        .map(|per_view| {
            let mut a = projection_sum(per_view, dataset)?;
            a.scale_in_place(1.0 / v_count);
            Ok(a)
        })
        .collect::<Result<_, SolverError>>()?;
    let (cluster_vec_sums, cluster_sq_sums) = rebuild_cluster_sums(&embeddings, &partition);

    Ok(SolverState {
        factors,
        embeddings: EmbeddingSet {
            embeddings,
            cluster_vec_sums,
            cluster_sq_sums,
        },
        partition,
        weights,
        latent_dims,
    })
}

/// `A_p = Σ_v H_p^(v)ᵀ X^(v)`, the view-aggregated projection driving the
/// embedding update.
fn projection_sum(
    factors_p: &[MatrixD],
    dataset: &MultiViewDataset,
) -> Result<MatrixD, SolverError> {
    let mut sum: Option<MatrixD> = None;
    for (h, x) in factors_p.iter().zip(dataset.views()) {
        let proj = matmul_at_b(h, x)?;
        match &mut sum {
            Some(acc) => acc.add_assign(&proj),
            None => sum = Some(proj),
        }
    }
    Ok(sum.expect("dataset has at least one view"))
}

fn rebuild_cluster_sums(
    embeddings: &[MatrixD],
    partition: &Partition,
) -> (Vec<MatrixD>, Vec<Vec<f64>>) {
    let k = partition.k();
    let mut vec_sums = Vec::with_capacity(embeddings.len());
    let mut sq_sums = Vec::with_capacity(embeddings.len());
    for z in embeddings {
        let mut t = MatrixD::zeros(z.rows(), k);
        let mut v = vec![0.0f64; k];
        for (i, &c) in partition.labels().iter().enumerate() {
            let zi = z.column(i);
            let tc = t.column_mut(c);
            for (acc, &val) in tc.iter_mut().zip(zi) {
                *acc += val;
            }
            v[c] += dot(zi, zi);
        }
        vec_sums.push(t);
        sq_sums.push(v);
    }
    (vec_sums, sq_sums)
}

/// Recompute the per-cluster running sums exactly from the embeddings and the
/// partition, discarding accumulated incremental drift.
pub fn refresh_cluster_sums(state: &mut SolverState) {
    let (vec_sums, sq_sums) = rebuild_cluster_sums(&state.embeddings.embeddings, &state.partition);
    state.embeddings.cluster_vec_sums = vec_sums;
    state.embeddings.cluster_sq_sums = sq_sums;
}

/// One Gauss–Seidel sweep over every embedding column of every space.
///
/// Column `i` in space `p` has the exact minimizer
///
/// ```text
/// z_p^i ← (a_p^i + λα_p²(t_p^c − z_p^i)) / (V + λα_p²(|A_c| − 1)),   c = cluster of i
/// ```
///
/// where `a_p^i` is column `i` of `A_p = Σ_v H_p^(v)ᵀ X^(v)`; `t_p^c − z_p^i`
/// is the sum over the *other* members of the cluster. Sums are maintained
/// incrementally after each column so later columns see the update.
pub fn update_embeddings(
    state: &mut SolverState,
    dataset: &MultiViewDataset,
    lambda: f64,
) -> Result<(), SolverError> {
    let v_count = dataset.view_count() as f64;
    let labels = state.partition.labels().to_vec();
    let counts = state.partition.counts().to_vec();
    for p in 0..state.latent_dims.len() {
        let a_p = projection_sum(&state.factors.factors[p], dataset)?;
        let alpha_sq = state.weights.alpha[p] * state.weights.alpha[p];
        let coupling = lambda * alpha_sq;
        let z = &mut state.embeddings.embeddings[p];
        let t = &mut state.embeddings.cluster_vec_sums[p];
        let v = &mut state.embeddings.cluster_sq_sums[p];
        let d_p = z.rows();
        let mut fresh = vec![0.0f64; d_p];
        for (i, &c) in labels.iter().enumerate() {
            let denom = v_count + coupling * (counts[c] as f64 - 1.0);
            let a_col = a_p.column(i);
            let t_col = t.column(c);
            let z_col = z.column(i);
            for (((slot, &a), &t_r), &z_r) in
                fresh.iter_mut().zip(a_col).zip(t_col).zip(z_col)
            {
                *slot = (a + coupling * (t_r - z_r)) / denom;
            }
            let old_sq = dot(z_col, z_col);
            let new_sq = dot(&fresh, &fresh);
            let t_col = t.column_mut(c);
            for ((acc, &new), &old) in t_col.iter_mut().zip(&fresh).zip(z_col) {
                *acc += new - old;
            }
            v[c] += new_sq - old_sq;
            z.column_mut(i).copy_from_slice(&fresh);
        }
    }
    Ok(())
}

/// Replace every basis by the orthogonal Procrustes solution: with
/// `B_p^(v) = X^(v) Z_pᵀ` and thin SVD `B = S Σ Vᵀ`, the trace-maximizing
/// orthonormal basis is `H_p^(v) = S Vᵀ`.
pub fn update_factors(
    state: &mut SolverState,
    dataset: &MultiViewDataset,
) -> Result<(), SolverError> {
    for (per_view, z) in state
        .factors
        .factors
        .iter_mut()
        .zip(&state.embeddings.embeddings)
    {
        for (h, x) in per_view.iter_mut().zip(dataset.views()) {
            let b = matmul_a_bt(x, z)?;
            let svd = thin_svd(&b)?;
            *h = svd.orthogonal_factor();
        }
    }
    debug_assert!(state.factors.max_orthonormality_error() < 1e-10);
    Ok(())
}

/// One sequential reassignment sweep over all samples.
///
/// Each sample is removed from its cluster (skipped entirely if that would
/// empty it), scored against every cluster by the weighted within-cluster
/// distance sum
///
/// ```text
/// score(c) = Σ_p α_p² (|A_c|·|z_p^i|² − 2 z_p^iᵀ t_p^c + v_p^c)
///          = Σ_p α_p² Σ_{j∈A_c} |z_p^i − z_p^j|²
/// ```
///
/// and re-inserted into the arg-min cluster, ties to the lowest index. The
/// running sums and counts are updated at each removal and insertion.
pub fn update_partition(state: &mut SolverState) {
    let m = state.latent_dims.len();
    let n = state.partition.labels.len();
    let k = state.partition.k();
    let alpha_sq: Vec<f64> = state.weights.alpha.iter().map(|a| a * a).collect();
    let mut z_sq = vec![0.0f64; m];
    let mut scores = vec![0.0f64; k];
    for i in 0..n {
        let c_old = state.partition.labels[i];
        if state.partition.counts[c_old] == 1 {
            // Reassigning would empty the cluster; a valid partition needs
            // all k clusters inhabited.
            continue;
        }
        state.partition.counts[c_old] -= 1;
        for (p, sq) in z_sq.iter_mut().enumerate() {
            let zi = state.embeddings.embeddings[p].column(i);
            *sq = dot(zi, zi);
            let t_col = state.embeddings.cluster_vec_sums[p].column_mut(c_old);
            for (acc, &val) in t_col.iter_mut().zip(zi) {
                *acc -= val;
            }
            state.embeddings.cluster_sq_sums[p][c_old] -= *sq;
        }

        scores.fill(0.0);
        for p in 0..m {
            let weight = alpha_sq[p];
            if weight == 0.0 {
                continue;
            }
            let z = &state.embeddings.embeddings[p];
            let zi = z.column(i);
            let t = &state.embeddings.cluster_vec_sums[p];
            let v = &state.embeddings.cluster_sq_sums[p];
            for (c, score) in scores.iter_mut().enumerate() {
                let members = state.partition.counts[c] as f64;
                *score += weight * (members * z_sq[p] - 2.0 * dot(zi, t.column(c)) + v[c]);
            }
        }
        let mut best = 0usize;
        let mut best_score = scores[0];
        for (c, &score) in scores.iter().enumerate().skip(1) {
            if score < best_score {
                best_score = score;
                best = c;
            }
        }

        state.partition.labels[i] = best;
        state.partition.counts[best] += 1;
        for (p, &sq) in z_sq.iter().enumerate() {
            let zi = state.embeddings.embeddings[p].column(i);
            let t_col = state.embeddings.cluster_vec_sums[p].column_mut(best);
            for (acc, &val) in t_col.iter_mut().zip(zi) {
                *acc += val;
            }
            state.embeddings.cluster_sq_sums[p][best] += sq;
        }
    }
    debug_assert_eq!(state.partition.counts.iter().sum::<usize>(), n);
    debug_assert!(state.partition.counts.iter().all(|&c| c > 0));
}

/// Within-cluster scatter of each latent space:
/// `r_p² = Σ_c Σ_{i,j∈A_c} |z_p^i − z_p^j|² = Σ_c 2(|A_c|·v_p^c − |t_p^c|²)`.
pub fn space_scatters(state: &SolverState) -> Vec<f64> {
    (0..state.latent_dims.len())
        .map(|p| {
            let t = &state.embeddings.cluster_vec_sums[p];
            let v = &state.embeddings.cluster_sq_sums[p];
            state
                .partition
                .counts()
                .iter()
                .enumerate()
                .map(|(c, &count)| {
                    let t_col = t.column(c);
                    2.0 * (count as f64 * v[c] - dot(t_col, t_col))
                })
                .sum()
        })
        .collect()
}

/// Closed-form minimizer of `Σ_p α_p² r_p²` on the simplex:
/// `α_p ∝ 1/r_p²`. Scatters below [`DEGENERATE_SCATTER`] take the limiting
/// solution — uniform weight over the degenerate spaces, zero elsewhere —
/// and the second return flags that this happened.
pub fn simplex_weights_from_scatter(r_sq: &[f64]) -> (Vec<f64>, bool) {
    let degenerate: Vec<bool> = r_sq.iter().map(|&r| r < DEGENERATE_SCATTER).collect();
    if degenerate.iter().any(|&d| d) {
        let count = degenerate.iter().filter(|&&d| d).count() as f64;
        let alpha = degenerate
            .iter()
            .map(|&d| if d { 1.0 / count } else { 0.0 })
            .collect();
        return (alpha, true);
    }
    let inverses: Vec<f64> = r_sq.iter().map(|&r| 1.0 / r).collect();
    let total: f64 = inverses.iter().sum();
    (inverses.into_iter().map(|inv| inv / total).collect(), false)
}

/// Update the space weights from the current scatters. Returns whether the
/// degenerate zero-scatter rule fired.
pub fn update_weights(state: &mut SolverState) -> bool {
    let (alpha, degenerate) = simplex_weights_from_scatter(&space_scatters(state));
    debug_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    state.weights.alpha = alpha;
    degenerate
}

/// The full objective: reconstruction plus the weighted within-cluster
/// penalty, evaluated through the cluster sums (no pairwise distances).
pub fn objective(state: &SolverState, dataset: &MultiViewDataset, lambda: f64) -> f64 {
    let mut recon = 0.0;
    for (per_view, z) in state.factors.factors.iter().zip(&state.embeddings.embeddings) {
        for (h, x) in per_view.iter().zip(dataset.views()) {
            let approx = matmul(h, z).expect("factor/embedding shapes agree");
            recon += x.frobenius_dist_sq(&approx);
        }
    }
    let trace_term: f64 = space_scatters(state)
        .iter()
        .zip(&state.weights.alpha)
        .map(|(r_sq, a)| a * a * r_sq)
        .sum();
    debug_assert!(
        trace_term >= -1e-10,
        "within-cluster distance sum went negative: {trace_term}"
    );
    recon + 0.5 * lambda * trace_term
}

/// Run the full alternating optimization.
///
/// Iterates embedding, basis, partition, and weight updates (the latter
/// skipped for [`Variant::EqualAlpha`]) until the relative objective change
/// drops below `rel_tol` or `max_iters` is reached. The per-iteration
/// objective is recorded and checked to be non-increasing; in debug builds
/// every sub-step is checked individually.
pub fn fit(
    dataset: &MultiViewDataset,
    config: &SolverConfig,
    variant: Variant,
) -> Result<FitResult, SolverError> {
    let config = variant.effective_config(config)?;
    let mut state = init_state(dataset, &config)?;
    let lambda = config.lambda;

    let mut previous = objective(&state, dataset, lambda);
    let mut trace = Vec::with_capacity(config.max_iters);
    let mut converged = false;
    let mut degenerate_weights = false;
    let mut iterations_run = 0;

    // In debug builds, verify each sub-step individually honors descent.
    macro_rules! check_substep {
        ($label:literal, $reference:expr) => {
            #[cfg(debug_assertions)]
            {
                let value = objective(&state, dataset, lambda);
                assert!(
                    value <= $reference + MONOTONE_SLACK * (1.0 + $reference.abs()),
                    concat!($label, " increased the objective: {} -> {}"),
                    $reference,
                    value
                );
            }
        };
    }

    for iteration in 1..=config.max_iters {
        update_embeddings(&mut state, dataset, lambda)?;
        check_substep!("embedding update", previous);
        update_factors(&mut state, dataset)?;
        check_substep!("basis update", previous);
        update_partition(&mut state);
        check_substep!("partition update", previous);
        if variant != Variant::EqualAlpha {
            degenerate_weights |= update_weights(&mut state);
            check_substep!("weight update", previous);
        }
        if iteration % REFRESH_PERIOD == 0 {
            refresh_cluster_sums(&mut state);
        }

        let current = objective(&state, dataset, lambda);
        assert!(
            current <= previous + MONOTONE_SLACK * (1.0 + previous.abs()),
            "objective increased across iteration {iteration}: {previous} -> {current}"
        );
        trace.push(current);
        iterations_run = iteration;
        let change = (previous - current).abs() / (1.0 + previous.abs());
        previous = current;
        if change < config.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        partition: state.partition,
        weights: state.weights,
        factors: state.factors,
        embeddings: state.embeddings,
        objective_trace: trace,
        iterations_run,
        converged,
        degenerate_weights,
    })
}
