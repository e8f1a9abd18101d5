//! Clustering quality metrics: accuracy under optimal label matching,
//! normalized mutual information, purity, and pairwise F-score.
//!
//! All four are computed from the truth-by-predicted contingency table, so
//! evaluation is O(n + k_true·k_pred) — no pair enumeration.

use thiserror::Error;

use crate::linalg::MatrixD;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label vectors have different lengths: truth {truth}, predicted {predicted}")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label vectors are empty")]
    Empty,
    #[error("{which} labels skip class {class}: classes must cover 0..k contiguously")]
    EmptyClass { which: &'static str, class: usize },
    #[error("cost matrix is {rows}x{cols}, expected square")]
    NonSquareCost { rows: usize, cols: usize },
    #[error("cost matrix has a non-finite entry at row {row}, column {col}")]
    NonFiniteCost { row: usize, col: usize },
}

/// A ground-truth labeling paired with a predicted one, validated to be the
/// same length with contiguous 0-based classes on both sides.
#[derive(Debug, Clone)]
pub struct LabelPair {
    truth: Vec<usize>,
    predicted: Vec<usize>,
}

impl LabelPair {
    pub fn new(truth: Vec<usize>, predicted: Vec<usize>) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: truth.len(),
                predicted: predicted.len(),
            });
        }
        if truth.is_empty() {
            return Err(MetricsError::Empty);
        }
        check_contiguous(&truth, "truth")?;
        check_contiguous(&predicted, "predicted")?;
        Ok(Self { truth, predicted })
    }

    pub fn truth(&self) -> &[usize] {
        &self.truth
    }

    pub fn predicted(&self) -> &[usize] {
        &self.predicted
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated nonempty on construction
    }
}

fn check_contiguous(labels: &[usize], which: &'static str) -> Result<(), MetricsError> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut seen = vec![false; k];
    for &y in labels {
        seen[y] = true;
    }
    if let Some(class) = seen.iter().position(|&s| !s) {
        return Err(MetricsError::EmptyClass { which, class });
    }
    Ok(())
}

/// Joint counts of (truth class, predicted cluster) with marginals.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// `counts[t][p]` = samples with truth class t and predicted cluster p.
    pub counts: Vec<Vec<usize>>,
    pub truth_marginals: Vec<usize>,
    pub predicted_marginals: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn from_pair(pair: &LabelPair) -> Self {
        let k_true = pair.truth.iter().max().map_or(0, |&m| m + 1);
        let k_pred = pair.predicted.iter().max().map_or(0, |&m| m + 1);
        let mut counts = vec![vec![0usize; k_pred]; k_true];
        for (&t, &p) in pair.truth.iter().zip(&pair.predicted) {
            counts[t][p] += 1;
        }
        let truth_marginals = counts.iter().map(|row| row.iter().sum()).collect();
        let predicted_marginals = (0..k_pred)
            .map(|p| counts.iter().map(|row| row[p]).sum())
            .collect();
        Self {
            counts,
            truth_marginals,
            predicted_marginals,
            n: pair.len(),
        }
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres).
/// Returns `assign` with `assign[row] = column`. Handles negative costs.
pub fn hungarian(cost: &MatrixD) -> Result<Vec<usize>, MetricsError> {
    if cost.rows() != cost.cols() {
        return Err(MetricsError::NonSquareCost {
            rows: cost.rows(),
            cols: cost.cols(),
        });
    }
    for j in 0..cost.cols() {
        for i in 0..cost.rows() {
            if !cost.get(i, j).is_finite() {
                return Err(MetricsError::NonFiniteCost { row: i, col: j });
            }
        }
    }
    let n = cost.rows();
    if n == 0 {
        return Ok(Vec::new());
    }

    // Potential-based shortest augmenting paths; arrays are 1-based with
    // index 0 as the virtual unmatched slot.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Walk the augmenting path back, flipping assignments.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[matched_row[j] - 1] = j - 1;
    }
    Ok(assign)
}

/// Fraction of samples whose predicted cluster, after the optimal cluster-to-
/// class matching, equals their truth class.
pub fn accuracy(pair: &LabelPair) -> f64 {
    let table = ContingencyTable::from_pair(pair);
    let k_true = table.truth_marginals.len();
    let k_pred = table.predicted_marginals.len();
    let side = k_true.max(k_pred);
    // Maximize matched counts = minimize negated counts, zero-padded square.
    let mut cost = MatrixD::zeros(side, side);
    for t in 0..k_true {
        for p in 0..k_pred {
            cost.set(p, t, -(table.counts[t][p] as f64));
        }
    }
    let assign = hungarian(&cost).expect("finite square cost");
    let matched: usize = (0..k_pred)
        .map(|p| {
            let t = assign[p];
            if t < k_true {
                table.counts[t][p]
            } else {
                0
            }
        })
        .sum();
    matched as f64 / table.n as f64
}

/// Mutual information between the labelings (log base 2), normalized by the
/// larger of the two entropies. Both labelings constant: defined as 1.
pub fn nmi(pair: &LabelPair) -> f64 {
    let table = ContingencyTable::from_pair(pair);
    let n = table.n as f64;
    let entropy = |counts: &mut dyn Iterator<Item = usize>| -> f64 {
        counts
            .filter(|&c| c > 0)
            .map(|c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .sum()
    };
    let h_true = entropy(&mut table.truth_marginals.iter().copied());
    let h_pred = entropy(&mut table.predicted_marginals.iter().copied());
    let h_max = h_true.max(h_pred);
    if h_max == 0.0 {
        return 1.0;
    }
    let h_joint = entropy(&mut table.counts.iter().flatten().copied());
    let mi = h_true + h_pred - h_joint;
    (mi / h_max).clamp(0.0, 1.0)
}

/// Fraction of samples in the majority truth class of their predicted cluster.
pub fn purity(pair: &LabelPair) -> f64 {
    let table = ContingencyTable::from_pair(pair);
    let majority_sum: usize = (0..table.predicted_marginals.len())
        .map(|p| table.counts.iter().map(|row| row[p]).max().unwrap_or(0))
        .sum();
    majority_sum as f64 / table.n as f64
}

/// Pair-counting F-score: over all unordered sample pairs, a true positive is
/// a pair placed together by both labelings; precision and recall follow, and
/// 0/0 ratios are 0.
pub fn fscore(pair: &LabelPair) -> f64 {
    let table = ContingencyTable::from_pair(pair);
    let choose2 = |c: usize| (c * c.saturating_sub(1) / 2) as f64;
    let together_truth: f64 = table.truth_marginals.iter().map(|&c| choose2(c)).sum();
    let together_pred: f64 = table.predicted_marginals.iter().map(|&c| choose2(c)).sum();
    let tp: f64 = table
        .counts
        .iter()
        .flat_map(|row| row.iter())
        .map(|&c| choose2(c))
        .sum();
    let fp = together_pred - tp;
    let fn_ = together_truth - tp;
    let precision = safe_ratio(tp, tp + fp);
    let recall = safe_ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
