//! Property-based checks of the structural invariants: factorization
//! round-trips, metric symmetries, bookkeeping identities.

use omvcdr::dataset::{
    concat_views, generate_synthetic, load_dataset, save_dataset, zscore_normalize,
    MultiViewDataset, SyntheticSpec,
};
use omvcdr::linalg::{matmul, matmul_at_b, thin_svd, MatrixD};
use omvcdr::metrics::{accuracy, fscore, nmi, purity, LabelPair};
use omvcdr::solver::simplex_weights_from_scatter;
use proptest::prelude::*;

fn finite_f64() -> impl Strategy<Value = f64> {
    use proptest::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

fn matrix(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = MatrixD> {
    (rows, cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-100.0f64..100.0, r * c)
            .prop_map(move |data| MatrixD::from_column_major(r, c, data).unwrap())
    })
}

/// Any label vector, squeezed to contiguous 0-based classes.
fn labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..6, n..=n).prop_map(|raw| {
        let mut remap = std::collections::HashMap::new();
        raw.into_iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(l).or_insert(next)
            })
            .collect()
    })
}

fn label_pair() -> impl Strategy<Value = LabelPair> {
    (1usize..60)
        .prop_flat_map(|n| (labels(n), labels(n)))
        .prop_map(|(truth, predicted)| LabelPair::new(truth, predicted).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn svd_factors_any_matrix(b in matrix(1..12, 1..12)) {
        let svd = thin_svd(&b).unwrap();
        let r = b.rows().min(b.cols());
        prop_assert_eq!(svd.singular_values.len(), r);
        for w in svd.singular_values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        let id = MatrixD::identity(r);
        let utu = matmul_at_b(&svd.left, &svd.left).unwrap();
        let vtv = matmul_at_b(&svd.right, &svd.right).unwrap();
        let max_dev = |m: &MatrixD, target: &MatrixD| {
            m.data()
                .iter()
                .zip(target.data())
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
        };
        prop_assert!(max_dev(&utu, &id) < 1e-10);
        prop_assert!(max_dev(&vtv, &id) < 1e-10);
        let rec = svd.reconstruct();
        let denom = b.frobenius_norm().max(1e-12);
        prop_assert!(b.frobenius_dist_sq(&rec).sqrt() / denom < 1e-8);
    }

    #[test]
    fn transposed_product_matches_explicit(
        (a, b) in (1usize..10, 1usize..8, 1usize..8).prop_flat_map(|(shared, ac, bc)| {
            (matrix(shared..shared + 1, ac..ac + 1), matrix(shared..shared + 1, bc..bc + 1))
        })
    ) {
        let fast = matmul_at_b(&a, &b).unwrap();
        let slow = matmul(&a.transpose(), &b).unwrap();
        for (x, y) in fast.data().iter().zip(slow.data()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn dataset_round_trip_is_bit_exact(
        views in (1usize..4, 1usize..12).prop_flat_map(|(v, n)| {
            prop::collection::vec(
                (1usize..6).prop_flat_map(move |d| {
                    prop::collection::vec(finite_f64(), d * n)
                        .prop_map(move |data| MatrixD::from_column_major(d, n, data).unwrap())
                }),
                v..=v,
            )
        })
    ) {
        let ds = MultiViewDataset::new(views, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_dataset(&ds, dir.path()).unwrap();
        let reloaded = load_dataset(&manifest).unwrap();
        prop_assert_eq!(ds, reloaded);
    }

    #[test]
    fn synthetic_generation_is_pure(seed in any::<u64>(), n in 4usize..30, k in 2usize..4) {
        prop_assume!(n >= k);
        let spec = SyntheticSpec {
            n,
            k,
            view_dims: vec![3, 5],
            separation: 4.0,
            noise_sigma: 0.5,
            seed,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(&a, &b);

        // Stacking then slicing row blocks recovers each view exactly.
        let stacked = concat_views(&a);
        let mut offset = 0;
        for x in a.views() {
            for c in 0..x.cols() {
                for r in 0..x.rows() {
                    prop_assert_eq!(stacked.get(offset + r, c), x.get(r, c));
                }
            }
            offset += x.rows();
        }
    }

    #[test]
    fn zscore_is_idempotent(x in matrix(1..6, 2..10)) {
        let ds = MultiViewDataset::new(vec![x], None).unwrap();
        let once = zscore_normalize(&ds);
        let twice = zscore_normalize(&once);
        for (a, b) in once.view(0).data().iter().zip(twice.view(0).data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn metrics_stay_in_unit_interval_and_relabel_invariant(
        pair in label_pair(),
        perm_seed in any::<u64>(),
    ) {
        let scores = [accuracy(&pair), nmi(&pair), purity(&pair), fscore(&pair)];
        for s in scores {
            prop_assert!((0.0..=1.0).contains(&s));
        }

        // Relabel the prediction by a random bijection.
        let k = pair.predicted().iter().max().unwrap() + 1;
        let mut perm: Vec<usize> = (0..k).collect();
        // Simple deterministic Fisher-Yates from the seed.
        let mut state = perm_seed | 1;
        for i in (1..k).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            perm.swap(i, j);
        }
        let relabeled: Vec<usize> = pair.predicted().iter().map(|&p| perm[p]).collect();
        let permuted = LabelPair::new(pair.truth().to_vec(), relabeled).unwrap();
        let permuted_scores = [
            accuracy(&permuted),
            nmi(&permuted),
            purity(&permuted),
            fscore(&permuted),
        ];
        for (a, b) in scores.iter().zip(&permuted_scores) {
            prop_assert!((a - b).abs() < 1e-12, "metric changed under relabeling: {} vs {}", a, b);
        }
    }

    #[test]
    fn fscore_marginals_match_pair_enumeration(pair in label_pair()) {
        let n = pair.len();
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for i in 0..n {
            for j in (i + 1)..n {
                let together_truth = pair.truth()[i] == pair.truth()[j];
                let together_pred = pair.predicted()[i] == pair.predicted()[j];
                match (together_truth, together_pred) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => {}
                }
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let expected = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        prop_assert!((fscore(&pair) - expected).abs() < 1e-12);
    }

    #[test]
    fn weight_closed_form_is_scale_invariant(
        r in prop::collection::vec(0.01f64..1e6, 1..5),
        scale in 0.01f64..1e6,
    ) {
        let (alpha, _) = simplex_weights_from_scatter(&r);
        let scaled: Vec<f64> = r.iter().map(|x| x * scale).collect();
        let (alpha_scaled, _) = simplex_weights_from_scatter(&scaled);
        let sum: f64 = alpha.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(alpha.iter().all(|&a| a >= 0.0));
        for (a, b) in alpha.iter().zip(&alpha_scaled) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[cfg(feature = "oracle")]
proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn accuracy_matches_exhaustive_search(pair in label_pair()) {
        let exhaustive = omvcdr::oracle::exhaustive_accuracy(&pair).unwrap();
        prop_assert!((accuracy(&pair) - exhaustive).abs() < 1e-12);
    }

    /// The linear-time scatter identity behind every sweep:
    /// Σ_{i,j∈A_c} |z_i − z_j|² = 2(|A_c|·v_c − |t_c|²).
    #[test]
    fn cluster_sum_identity_matches_dense_distances(
        z in matrix(1..5, 4..30),
        seed in any::<u64>(),
    ) {
        let n = z.cols();
        let k = 3.min(n);
        let mut state = seed | 1;
        let labels: Vec<usize> = (0..n)
            .map(|i| {
                if i < k {
                    i
                } else {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 33) as usize % k
                }
            })
            .collect();

        let dense = omvcdr::oracle::dense_distance_matrix(&z).unwrap();
        let mut dense_total = vec![0.0f64; k];
        for (i, &ci) in labels.iter().enumerate() {
            for (j, &cj) in labels.iter().enumerate() {
                if ci == cj {
                    dense_total[ci] += dense.get(i, j);
                }
            }
        }

        for (c, dense_value) in dense_total.iter().enumerate() {
            let members: Vec<usize> =
                (0..n).filter(|&i| labels[i] == c).collect();
            let mut t = vec![0.0f64; z.rows()];
            let mut v = 0.0f64;
            for &i in &members {
                for (acc, &x) in t.iter_mut().zip(z.column(i)) {
                    *acc += x;
                }
                v += z.column(i).iter().map(|x| x * x).sum::<f64>();
            }
            let t_sq: f64 = t.iter().map(|x| x * x).sum();
            let via_sums = 2.0 * (members.len() as f64 * v - t_sq);
            let scale = 1.0 + dense_value.abs();
            prop_assert!(
                (via_sums - dense_value).abs() / scale < 1e-9,
                "cluster {}: identity {} vs dense {}",
                c,
                via_sums,
                dense_value
            );
        }
    }
}

/// The SVD contract at the largest size the solver will see in practice.
#[test]
fn svd_reconstructs_large_matrix() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(80);
    let data: Vec<f64> = (0..200 * 200).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = MatrixD::from_column_major(200, 200, data).unwrap();
    let svd = thin_svd(&b).unwrap();
    let rec = svd.reconstruct();
    let rel = b.frobenius_dist_sq(&rec).sqrt() / b.frobenius_norm();
    assert!(rel < 1e-8, "relative reconstruction error {rel}");
}
