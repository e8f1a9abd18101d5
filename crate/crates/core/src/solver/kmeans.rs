//! Lloyd k-means with k-means++ seeding, used only to initialize the
//! partition from the stacked views.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::MatrixD;
use crate::solver::{Partition, SolverError};

const MAX_LLOYD_ITERS: usize = 300;

/// Cluster the columns of `x` into `k` groups. Deterministic for fixed
/// inputs: k-means++ seeding driven by `seed`, nearest-centroid ties broken
/// toward the lower cluster index, and empty clusters repaired by stealing
/// the sample farthest from its centroid.
pub fn kmeans_lloyd(x: &MatrixD, k: usize, seed: u64) -> Result<Partition, SolverError> {
    let n = x.cols();
    let d = x.rows();
    if n < k {
        return Err(SolverError::TooFewSamples { n, k });
    }
    if k == 0 {
        return Err(SolverError::InvalidConfig {
            message: "k must be positive".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: each next center drawn proportionally to squared
    // distance from the nearest chosen one.
    let mut centroids = MatrixD::zeros(d, k);
    let first = rng.random_range(0..n);
    centroids.column_mut(0).copy_from_slice(x.column(first));
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| dist_sq(x.column(i), centroids.column(0)))
        .collect();
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All samples coincide with existing centers; any pick works.
            rng.random_range(0..n)
        };
        centroids.column_mut(c).copy_from_slice(x.column(pick));
        for (i, best) in nearest_sq.iter_mut().enumerate() {
            let dist = dist_sq(x.column(i), centroids.column(c));
            if dist < *best {
                *best = dist;
            }
        }
    }

    let mut labels = vec![0usize; n];
    let mut counts = vec![0usize; k];
    assign_nearest(x, &centroids, &mut labels);
    tally(&labels, &mut counts);
    repair_empty_clusters(x, &centroids, &mut labels, &mut counts)?;

    for _ in 0..MAX_LLOYD_ITERS {
        recompute_centroids(x, &labels, &counts, &mut centroids);
        let mut next = labels.clone();
        assign_nearest(x, &centroids, &mut next);
        let mut next_counts = vec![0usize; k];
        tally(&next, &mut next_counts);
        repair_empty_clusters(x, &centroids, &mut next, &mut next_counts)?;
        if next == labels {
            break;
        }
        labels = next;
        counts = next_counts;
    }

    Partition::from_labels(labels, k)
}

#[inline]
fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign_nearest(x: &MatrixD, centroids: &MatrixD, labels: &mut [usize]) {
    for (i, label) in labels.iter_mut().enumerate() {
        let col = x.column(i);
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for c in 0..centroids.cols() {
            let dist = dist_sq(col, centroids.column(c));
            if dist < best_dist {
                best_dist = dist;
                best = c;
            }
        }
        *label = best;
    }
}

fn tally(labels: &[usize], counts: &mut [usize]) {
    counts.fill(0);
    for &c in labels {
        counts[c] += 1;
    }
}

fn recompute_centroids(x: &MatrixD, labels: &[usize], counts: &[usize], centroids: &mut MatrixD) {
    for c in 0..centroids.cols() {
        centroids.column_mut(c).fill(0.0);
    }
    for (i, &c) in labels.iter().enumerate() {
        let src = x.column(i);
        let dst = centroids.column_mut(c);
        for (acc, &v) in dst.iter_mut().zip(src) {
            *acc += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let inv = 1.0 / count as f64;
            for v in centroids.column_mut(c) {
                *v *= inv;
            }
        }
    }
}

/// Give every empty cluster the sample farthest from its own centroid, taken
/// from a cluster that can spare one. Deterministic: clusters refilled in
/// index order, a strict > comparison favors the lowest donor index on ties.
fn repair_empty_clusters(
    x: &MatrixD,
    centroids: &MatrixD,
    labels: &mut [usize],
    counts: &mut [usize],
) -> Result<(), SolverError> {
    let k = counts.len();
    for c in 0..k {
        while counts[c] == 0 {
            let mut donor: Option<(usize, f64)> = None;
            for (i, &ci) in labels.iter().enumerate() {
                if counts[ci] < 2 {
                    continue;
                }
                let dist = dist_sq(x.column(i), centroids.column(ci));
                if donor.is_none_or(|(_, best)| dist > best) {
                    donor = Some((i, dist));
                }
            }
            match donor {
                Some((i, _)) => {
                    counts[labels[i]] -= 1;
                    labels[i] = c;
                    counts[c] += 1;
                }
                None => {
                    return Err(SolverError::KmeansDegenerate);
                }
            }
        }
    }
    Ok(())
}
