//! Deliberately naive reference implementations for tests and verification:
//! dense pairwise-distance matrices, literal objective evaluation, exhaustive
//! searches. Everything here trades speed for obviousness and carries hard
//! size guards so none of it can sneak into a production path.
//!
//! Wherever an oracle and its fast-path counterpart disagree beyond stated
//! tolerances, the oracle is treated as ground truth.

use thiserror::Error;

use crate::dataset::MultiViewDataset;
use crate::linalg::{matmul, matmul_at_b, MatrixD};
use crate::metrics::LabelPair;
use crate::solver::{FactorSet, Partition, SolverError, Weights};

/// Dense oracles refuse inputs with more samples than this.
pub const MAX_ORACLE_SAMPLES: usize = 2000;
/// Exhaustive label matching refuses more classes than this (k! blowup).
pub const MAX_ORACLE_CLASSES: usize = 6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} samples exceed the oracle size guard of {limit}")]
    TooManySamples { n: usize, limit: usize },
    #[error("{k} classes exceed the exhaustive-search guard of {limit}")]
    TooManyClasses { k: usize, limit: usize },
    #[error("grid resolution {resolution} outside (0, 0.1]")]
    BadResolution { resolution: f64 },
    #[error("scatter values must be positive, got {value}")]
    NonPositiveScatter { value: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

fn guard_samples(n: usize) -> Result<(), OracleError> {
    if n > MAX_ORACLE_SAMPLES {
        return Err(OracleError::TooManySamples {
            n,
            limit: MAX_ORACLE_SAMPLES,
        });
    }
    Ok(())
}

/// All pairwise squared Euclidean distances between the columns of `z`:
/// entry `(i, j)` is `|z^i − z^j|²`.
pub fn dense_distance_matrix(z: &MatrixD) -> Result<MatrixD, OracleError> {
    let n = z.cols();
    guard_samples(n)?;
    let mut d = MatrixD::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist: f64 = z
                .column(i)
                .iter()
                .zip(z.column(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.set(i, j, dist);
            d.set(j, i, dist);
        }
    }
    Ok(d)
}

fn one_hot(partition: &Partition) -> MatrixD {
    let n = partition.labels().len();
    let mut y = MatrixD::zeros(n, partition.k());
    for (i, &c) in partition.labels().iter().enumerate() {
        y.set(i, c, 1.0);
    }
    y
}

/// The objective evaluated literally: reconstruction by explicit products,
/// and the penalty as `(λ/2)·Tr(Yᵀ (Σ_p α_p² D_p) Y)` with dense distance
/// matrices and an explicit one-hot `Y`.
pub fn naive_objective(
    dataset: &MultiViewDataset,
    factors: &FactorSet,
    embeddings: &[MatrixD],
    partition: &Partition,
    weights: &Weights,
    lambda: f64,
) -> Result<f64, OracleError> {
    guard_samples(dataset.sample_count())?;
    let mut recon = 0.0;
    for (per_view, z) in factors.factors.iter().zip(embeddings) {
        for (h, x) in per_view.iter().zip(dataset.views()) {
            let approx = matmul(h, z).map_err(SolverError::from)?;
            recon += x.frobenius_dist_sq(&approx);
        }
    }

    let n = dataset.sample_count();
    let mut m = MatrixD::zeros(n, n);
    for (z, &alpha) in embeddings.iter().zip(&weights.alpha) {
        let mut d = dense_distance_matrix(z)?;
        d.scale_in_place(alpha * alpha);
        m.add_assign(&d);
    }
    let y = one_hot(partition);
    let my = matmul(&m, &y).map_err(SolverError::from)?;
    let ytmy = matmul_at_b(&y, &my).map_err(SolverError::from)?;
    let trace: f64 = (0..ytmy.cols()).map(|c| ytmy.get(c, c)).sum();
    Ok(recon + 0.5 * lambda * trace)
}

/// The partition sweep with every quantity read off dense matrices: the same
/// remove → score → arg-min → re-insert order as the solver, but scoring
/// cluster `c` as `Σ_{j∈A_c} M_ij` over the combined distance matrix `M`.
pub fn naive_partition_step(
    embeddings: &[MatrixD],
    partition: &Partition,
    weights: &Weights,
) -> Result<Partition, OracleError> {
    let n = partition.labels().len();
    let k = partition.k();
    guard_samples(n)?;
    let mut m = MatrixD::zeros(n, n);
    for (z, &alpha) in embeddings.iter().zip(&weights.alpha) {
        let mut d = dense_distance_matrix(z)?;
        d.scale_in_place(alpha * alpha);
        m.add_assign(&d);
    }

    let mut labels = partition.labels().to_vec();
    let mut counts = partition.counts().to_vec();
    for i in 0..n {
        let c_old = labels[i];
        if counts[c_old] == 1 {
            continue;
        }
        counts[c_old] -= 1;
        let mut scores = vec![0.0f64; k];
        for (j, &cj) in labels.iter().enumerate() {
            if j != i {
                scores[cj] += m.get(i, j);
            }
        }
        let mut best = 0usize;
        for c in 1..k {
            if scores[c] < scores[best] {
                best = c;
            }
        }
        labels[i] = best;
        counts[best] += 1;
    }
    Ok(Partition::from_labels(labels, k)?)
}

/// Space weights from dense scatters: `r_p² = Tr(Yᵀ D_p Y)` summed entry by
/// entry over within-cluster pairs, then the inverse-scatter closed form.
pub fn naive_weights(
    embeddings: &[MatrixD],
    partition: &Partition,
) -> Result<Vec<f64>, OracleError> {
    guard_samples(partition.labels().len())?;
    let labels = partition.labels();
    let mut r_sq = Vec::with_capacity(embeddings.len());
    for z in embeddings {
        let d = dense_distance_matrix(z)?;
        let mut scatter = 0.0;
        for (i, &ci) in labels.iter().enumerate() {
            for (j, &cj) in labels.iter().enumerate() {
                if ci == cj {
                    scatter += d.get(i, j);
                }
            }
        }
        r_sq.push(scatter);
    }
    let inverses: Vec<f64> = r_sq.iter().map(|&r| 1.0 / r).collect();
    let total: f64 = inverses.iter().sum();
    Ok(inverses.into_iter().map(|inv| inv / total).collect())
}

/// Grid search over the simplex for `min Σ_p α_p² r_p²`, certifying the
/// closed-form weight update. Resolution is the grid step.
pub fn simplex_grid_min(r_sq: &[f64], resolution: f64) -> Result<Vec<f64>, OracleError> {
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(OracleError::BadResolution { resolution });
    }
    if let Some(&bad) = r_sq.iter().find(|&&r| r <= 0.0) {
        return Err(OracleError::NonPositiveScatter { value: bad });
    }
    let steps = (1.0 / resolution).round() as usize;
    let m = r_sq.len();
    let mut best_alpha = vec![0.0; m];
    let mut best_value = f64::INFINITY;
    let mut current = vec![0usize; m];
    // Enumerate all compositions of `steps` into m parts.
    fn recurse(
        slot: usize,
        remaining: usize,
        steps: usize,
        r_sq: &[f64],
        current: &mut Vec<usize>,
        best_value: &mut f64,
        best_alpha: &mut Vec<f64>,
    ) {
        let m = r_sq.len();
        if slot == m - 1 {
            current[slot] = remaining;
            let value: f64 = current
                .iter()
                .zip(r_sq)
                .map(|(&t, &r)| {
                    let a = t as f64 / steps as f64;
                    a * a * r
                })
                .sum();
            if value < *best_value {
                *best_value = value;
                for (dst, &t) in best_alpha.iter_mut().zip(current.iter()) {
                    *dst = t as f64 / steps as f64;
                }
            }
            return;
        }
        for t in 0..=remaining {
            current[slot] = t;
            recurse(
                slot + 1,
                remaining - t,
                steps,
                r_sq,
                current,
                best_value,
                best_alpha,
            );
        }
    }
    recurse(
        0,
        steps,
        steps,
        r_sq,
        &mut current,
        &mut best_value,
        &mut best_alpha,
    );
    Ok(best_alpha)
}

/// The value of `Σ α_p² r_p²` at a weight vector, shared by grid and
/// closed-form comparisons.
pub fn weighted_scatter(alpha: &[f64], r_sq: &[f64]) -> f64 {
    alpha.iter().zip(r_sq).map(|(&a, &r)| a * a * r).sum()
}

/// Accuracy by brute force over every bijective cluster-to-class mapping.
pub fn exhaustive_accuracy(pair: &LabelPair) -> Result<f64, OracleError> {
    let k_true = pair.truth().iter().max().map_or(0, |&m| m + 1);
    let k_pred = pair.predicted().iter().max().map_or(0, |&m| m + 1);
    let side = k_true.max(k_pred);
    if side > MAX_ORACLE_CLASSES {
        return Err(OracleError::TooManyClasses {
            k: side,
            limit: MAX_ORACLE_CLASSES,
        });
    }
    let mut mapping: Vec<usize> = (0..side).collect();
    let mut best = 0usize;
    permute(&mut mapping, 0, &mut |perm| {
        let matched = pair
            .truth()
            .iter()
            .zip(pair.predicted())
            .filter(|&(&t, &p)| perm[p] == t)
            .count();
        if matched > best {
            best = matched;
        }
    });
    Ok(best as f64 / pair.len() as f64)
}

fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}
