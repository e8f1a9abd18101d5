//! Minimal dense linear algebra for the solver: column-major matrices, a few
//! products, and a deterministic thin SVD.
//!
//! The solver sweeps embedding columns one at a time, so storage is
//! column-major and column slices are the primary access path. This is not a
//! general BLAS: only the operations the alternating steps need are provided.

use thiserror::Error;

/// Maximum number of Jacobi sweeps before [`thin_svd`] gives up.
pub const SVD_MAX_SWEEPS: usize = 100;
/// Convergence threshold on the relative off-diagonal residual
/// `|w_p . w_q| / (|w_p| |w_q|)`.
pub const SVD_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: cannot combine {left_rows}x{left_cols} with {right_rows}x{right_cols} in {op}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("matrix data has length {found}, expected {rows}x{cols} = {expected}")]
    BadDataLength {
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },
    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:.3e})")]
    SvdNoConvergence { sweeps: usize, residual: f64 },
}

/// Dense real matrix in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixD {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixD {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Rectangular matrix with ones on the leading diagonal, zeros elsewhere.
    pub fn eye_rect(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.data[i * rows + i] = 1.0;
        }
        m
    }

    /// Build from column-major data, validating length and finiteness.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::BadDataLength {
                rows,
                cols,
                expected: rows * cols,
                found: data.len(),
            });
        }
        for (idx, &x) in data.iter().enumerate() {
            if !x.is_finite() {
                return Err(LinalgError::NonFiniteEntry {
                    row: idx.checked_rem(rows).unwrap_or(0),
                    col: idx.checked_div(rows).unwrap_or(0),
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from row slices (convenience for literals in tests and loaders).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(LinalgError::BadDataLength {
                    rows: r,
                    cols: c,
                    expected: c,
                    found: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(LinalgError::NonFiniteEntry { row: i, col: j });
                }
                m.data[j * r + i] = x;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    #[inline]
    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> MatrixD {
        let mut t = MatrixD::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[i * self.cols + j] = self.data[j * self.rows + i];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Squared Frobenius distance `|self - other|_F^2`.
    pub fn frobenius_dist_sq(&self, other: &MatrixD) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    pub fn add_assign(&mut self, other: &MatrixD) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard matrix product `a * b`.
pub fn matmul(a: &MatrixD, b: &MatrixD) -> Result<MatrixD, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut c = MatrixD::zeros(a.rows, b.cols);
    for j in 0..b.cols {
        let bj = b.column(j);
        let cj = c.column_mut(j);
        for (t, &w) in bj.iter().enumerate() {
            let at = a.column(t);
            for i in 0..a.rows {
                cj[i] += w * at[i];
            }
        }
    }
    Ok(c)
}

/// `a^T * b` without materializing the transpose. Requires `a.rows == b.rows`.
pub fn matmul_at_b(a: &MatrixD, b: &MatrixD) -> Result<MatrixD, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul_at_b",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut c = MatrixD::zeros(a.cols, b.cols);
    for j in 0..b.cols {
        let bj = b.column(j);
        for (i, slot) in c.column_mut(j).iter_mut().enumerate() {
            *slot = dot(a.column(i), bj);
        }
    }
    Ok(c)
}

/// `a * b^T` without materializing the transpose. Requires `a.cols == b.cols`.
pub fn matmul_a_bt(a: &MatrixD, b: &MatrixD) -> Result<MatrixD, LinalgError> {
    if a.cols != b.cols {
        return Err(LinalgError::DimensionMismatch {
            op: "matmul_a_bt",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut c = MatrixD::zeros(a.rows, b.rows);
    for t in 0..a.cols {
        let at = a.column(t);
        let bt = b.column(t);
        for (j, &w) in bt.iter().enumerate() {
            let cj = c.column_mut(j);
            for (slot, &x) in cj.iter_mut().zip(at) {
                *slot += x * w;
            }
        }
    }
    Ok(c)
}

/// Thin singular value decomposition `b = left * diag(singular_values) * right^T`
/// with `r = min(rows, cols)` factors.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// rows x r, orthonormal columns.
    pub left: MatrixD,
    /// Non-increasing, non-negative, length r.
    pub singular_values: Vec<f64>,
    /// cols x r, orthonormal columns.
    pub right: MatrixD,
}

impl ThinSvd {
    /// `left * diag(singular_values) * right^T`, for verification.
    pub fn reconstruct(&self) -> MatrixD {
        let r = self.singular_values.len();
        let mut scaled = self.left.clone();
        for j in 0..r {
            let s = self.singular_values[j];
            for x in scaled.column_mut(j) {
                *x *= s;
            }
        }
        matmul_a_bt(&scaled, &self.right).expect("factor shapes are consistent")
    }

    /// Trace-maximizing orthonormal factor `left * right^T` (the closed-form
    /// solution of `max Tr(H^T B)` over `H^T H = I`).
    pub fn orthogonal_factor(&self) -> MatrixD {
        matmul_a_bt(&self.left, &self.right).expect("factor shapes are consistent")
    }
}

/// Deterministic thin SVD by one-sided Jacobi.
///
/// Rank deficiency yields exact zero singular values with the corresponding
/// left columns completed to an orthonormal set.
pub fn thin_svd(b: &MatrixD) -> Result<ThinSvd, LinalgError> {
    debug_assert!(b.data.iter().all(|x| x.is_finite()), "thin_svd: non-finite input");
    if b.rows >= b.cols {
        let (left, sigma, right) = jacobi_svd_tall(b)?;
        Ok(ThinSvd {
            left,
            singular_values: sigma,
            right,
        })
    } else {
        // Factor the transpose and swap the roles of the singular vectors.
        let (left, sigma, right) = jacobi_svd_tall(&b.transpose())?;
        Ok(ThinSvd {
            left: right,
            singular_values: sigma,
            right: left,
        })
    }
}

/// One-sided Jacobi on a tall (rows >= cols) matrix: right-rotations make the
/// working columns mutually orthogonal, then column norms are the singular
/// values.
fn jacobi_svd_tall(b: &MatrixD) -> Result<(MatrixD, Vec<f64>, MatrixD), LinalgError> {
    let m = b.rows;
    let n = b.cols;
    let mut w = b.clone();
    let mut v = MatrixD::identity(n);

    let mut residual = 0.0f64;
    let mut converged = n < 2;
    for _sweep in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut max_off = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let wp = w.column(p);
                let wq = w.column(q);
                let app = dot(wp, wp);
                let aqq = dot(wq, wq);
                let apq = dot(wp, wq);
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let off = apq.abs() / (app * aqq).sqrt();
                if off > max_off {
                    max_off = off;
                }
                if off <= SVD_TOL {
                    continue;
                }
                // Rotation that annihilates the (p, q) cross term.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        residual = max_off;
        if max_off <= SVD_TOL {
            converged = true;
        }
    }
    if !converged {
        return Err(LinalgError::SvdNoConvergence {
            sweeps: SVD_MAX_SWEEPS,
            residual,
        });
    }

    let mut norms: Vec<f64> = (0..n).map(|j| dot(w.column(j), w.column(j)).sqrt()).collect();
    // Sort non-increasing; stable so equal values keep their column order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite norms"));

    let mut left = MatrixD::zeros(m, n);
    let mut right = MatrixD::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = norms[src];
        left.column_mut(dst).copy_from_slice(w.column(src));
        right.column_mut(dst).copy_from_slice(v.column(src));
    }
    norms.sort_by(|a, b| b.partial_cmp(a).expect("finite norms"));

    // Negligible columns are treated as exact rank deficiency.
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let rank_tol = sigma_max * f64::EPSILON * (m.max(n) as f64);
    let mut needs_completion = Vec::new();
    for (j, s) in sigma.iter_mut().enumerate() {
        if *s <= rank_tol {
            *s = 0.0;
            for x in left.column_mut(j) {
                *x = 0.0;
            }
            needs_completion.push(j);
        } else {
            let inv = 1.0 / *s;
            for x in left.column_mut(j) {
                *x *= inv;
            }
        }
    }
    for &j in &needs_completion {
        complete_orthonormal_column(&mut left, j);
    }

    Ok((left, sigma, right))
}

#[inline]
fn rotate_columns(m: &mut MatrixD, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.rows;
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (head, tail) = m.data.split_at_mut(hi * rows);
    let col_lo = &mut head[lo * rows..(lo + 1) * rows];
    let col_hi = &mut tail[..rows];
    if p < q {
        for (x, y) in col_lo.iter_mut().zip(col_hi.iter_mut()) {
            let xp = *x;
            let xq = *y;
            *x = c * xp - s * xq;
            *y = s * xp + c * xq;
        }
    } else {
        for (y, x) in col_lo.iter_mut().zip(col_hi.iter_mut()) {
            let xp = *x;
            let xq = *y;
            *x = c * xp - s * xq;
            *y = s * xp + c * xq;
        }
    }
}

/// Replace zero column `j` with the unit vector most orthogonal to the other
/// columns, via twice-iterated Gram-Schmidt over canonical candidates.
fn complete_orthonormal_column(u: &mut MatrixD, j: usize) {
    let m = u.rows;
    let n = u.cols;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for cand in 0..m {
        let mut col = vec![0.0; m];
        col[cand] = 1.0;
        for _ in 0..2 {
            for k in 0..n {
                if k == j {
                    continue;
                }
                let uk = u.column(k);
                let proj = dot(&col, uk);
                for (x, &y) in col.iter_mut().zip(uk) {
                    *x -= proj * y;
                }
            }
        }
        let norm = dot(&col, &col).sqrt();
        if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
            best = Some((norm, col));
        }
    }
    if let Some((norm, col)) = best {
        if norm > 0.0 {
            let target = u.column_mut(j);
            for (x, &y) in target.iter_mut().zip(&col) {
                *x = y / norm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> MatrixD {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        MatrixD::from_column_major(rows, cols, data).unwrap()
    }

    /// Plain triple loop, independent of the production kernels.
    fn naive_matmul(a: &MatrixD, b: &MatrixD) -> MatrixD {
        let mut c = MatrixD::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for t in 0..a.cols() {
                    acc += a.get(i, t) * b.get(t, j);
                }
                c.set(i, j, acc);
            }
        }
        c
    }

    fn max_abs_diff(a: &MatrixD, b: &MatrixD) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn matmul_identity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 5);
        let id = MatrixD::identity(3);
        assert_eq!(matmul(&id, &a).unwrap(), a);
        let zero = MatrixD::zeros(5, 4);
        let prod = matmul(&a, &zero).unwrap();
        assert!(prod.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn matmul_two_by_two() {
        let a = MatrixD::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = MatrixD::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let c = matmul(&a, &b).unwrap();
        let expected = MatrixD::from_rows(&[vec![19.0, 22.0], vec![43.0, 50.0]]).unwrap();
        assert_eq!(c, expected);
        assert_eq!(naive_matmul(&a, &b), expected);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = MatrixD::zeros(2, 3);
        let b = MatrixD::zeros(4, 2);
        assert!(matches!(
            matmul(&a, &b),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn at_b_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 5, 3);
        let b = random_matrix(&mut rng, 5, 4);
        let fast = matmul_at_b(&a, &b).unwrap();
        let slow = matmul(&a.transpose(), &b).unwrap();
        assert!(max_abs_diff(&fast, &slow) < 1e-12);

        let id = MatrixD::identity(5);
        assert_eq!(matmul_at_b(&id, &b).unwrap(), b);
    }

    #[test]
    fn at_a_gram_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 6, 4);
        let g = matmul_at_b(&a, &a).unwrap();
        for i in 0..4 {
            assert!(g.get(i, i) >= 0.0);
            for j in 0..4 {
                assert_abs_diff_eq!(g.get(i, j), g.get(j, i), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn a_bt_matches_explicit_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 4, 6);
        let b = random_matrix(&mut rng, 3, 6);
        let fast = matmul_a_bt(&a, &b).unwrap();
        let slow = matmul(&a, &b.transpose()).unwrap();
        assert!(max_abs_diff(&fast, &slow) < 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let err = MatrixD::from_rows(&[vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, LinalgError::NonFiniteEntry { row: 0, col: 1 }));
        assert!(MatrixD::from_column_major(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    fn check_svd_invariants(b: &MatrixD, svd: &ThinSvd) {
        let r = b.rows().min(b.cols());
        assert_eq!(svd.singular_values.len(), r);
        for w in svd.singular_values.windows(2) {
            assert!(w[0] >= w[1], "singular values must be non-increasing");
        }
        assert!(svd.singular_values.iter().all(|&s| s >= 0.0));
        let utu = matmul_at_b(&svd.left, &svd.left).unwrap();
        let vtv = matmul_at_b(&svd.right, &svd.right).unwrap();
        let id = MatrixD::identity(r);
        assert!(max_abs_diff(&utu, &id) < 1e-10, "left factor not orthonormal");
        assert!(max_abs_diff(&vtv, &id) < 1e-10, "right factor not orthonormal");
        let rec = svd.reconstruct();
        let denom = b.frobenius_norm().max(1e-300);
        assert!(
            b.frobenius_dist_sq(&rec).sqrt() / denom < 1e-8,
            "reconstruction error too large"
        );
    }

    #[test]
    fn svd_identity() {
        let b = MatrixD::identity(2);
        let svd = thin_svd(&b).unwrap();
        assert_abs_diff_eq!(svd.singular_values[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(svd.singular_values[1], 1.0, epsilon = 1e-12);
        check_svd_invariants(&b, &svd);
    }

    #[test]
    fn svd_diagonal_is_analytic() {
        let b = MatrixD::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let svd = thin_svd(&b).unwrap();
        assert_abs_diff_eq!(svd.singular_values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(svd.singular_values[1], 2.0, epsilon = 1e-12);
        check_svd_invariants(&b, &svd);
    }

    #[test]
    fn svd_negative_diagonal_orthogonal_factor() {
        // diag(1, -2) has singular values (2, 1); the trace-maximizing factor
        // flips the sign of the second axis.
        let b = MatrixD::from_rows(&[vec![1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let svd = thin_svd(&b).unwrap();
        assert_abs_diff_eq!(svd.singular_values[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(svd.singular_values[1], 1.0, epsilon = 1e-12);
        let h = svd.orthogonal_factor();
        let trace: f64 = (0..2).map(|i| (0..2).map(|t| h.get(t, i) * b.get(t, i)).sum::<f64>()).sum();
        assert_abs_diff_eq!(trace, 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(h.get(0, 0), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(h.get(1, 1), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn svd_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(rows, cols) in &[(6, 4), (4, 6), (1, 5), (5, 1), (7, 7), (40, 11)] {
            let b = random_matrix(&mut rng, rows, cols);
            let svd = thin_svd(&b).unwrap();
            check_svd_invariants(&b, &svd);
        }
    }

    #[test]
    fn svd_rank_deficient_completion() {
        // Two proportional columns: rank 1, one exact zero singular value.
        let b = MatrixD::from_rows(&[
            vec![1.0, 2.0],
            vec![2.0, 4.0],
            vec![3.0, 6.0],
        ])
        .unwrap();
        let svd = thin_svd(&b).unwrap();
        assert!(svd.singular_values[1] == 0.0);
        check_svd_invariants(&b, &svd);

        let zero = MatrixD::zeros(4, 3);
        let svd = thin_svd(&zero).unwrap();
        assert!(svd.singular_values.iter().all(|&s| s == 0.0));
        check_svd_invariants(&zero, &svd);
    }

    #[test]
    fn svd_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = random_matrix(&mut rng, 9, 5);
        let s1 = thin_svd(&b).unwrap();
        let s2 = thin_svd(&b).unwrap();
        assert_eq!(s1.left, s2.left);
        assert_eq!(s1.singular_values, s2.singular_values);
        assert_eq!(s1.right, s2.right);
    }

    #[test]
    fn svd_trace_identity() {
        // Tr((left right^T)^T b) equals the sum of singular values.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let b = random_matrix(&mut rng, 8, 3);
            let svd = thin_svd(&b).unwrap();
            let h = svd.orthogonal_factor();
            let trace: f64 = (0..b.cols())
                .map(|j| dot(h.column(j), b.column(j)))
                .sum();
            let sigma_sum: f64 = svd.singular_values.iter().sum();
            assert_abs_diff_eq!(trace, sigma_sum, epsilon = 1e-8 * (1.0 + sigma_sum));
        }
    }

    /// Independent trace-maximization oracle: retracted gradient ascent of
    /// Tr(H^T B) over orthonormal-column H, using a hand-rolled Gram-Schmidt
    /// retraction (no calls into the SVD under test).
    #[allow(clippy::needless_range_loop)] // index-heavy math on nested vecs
    fn stiefel_ascent_trace(b: &MatrixD, seed: u64, iters: usize) -> f64 {
        let m = b.rows();
        let n = b.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let orthonormalize = |h: &mut Vec<Vec<f64>>| {
            for j in 0..h.len() {
                for _ in 0..2 {
                    for k in 0..j {
                        let proj: f64 = h[j].iter().zip(&h[k]).map(|(a, c)| a * c).sum();
                        for i in 0..m {
                            let hk = h[k][i];
                            h[j][i] -= proj * hk;
                        }
                    }
                }
                let norm: f64 = h[j].iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm > 1e-12);
                for x in &mut h[j] {
                    *x /= norm;
                }
            }
        };
        orthonormalize(&mut h);
        let trace_of = |h: &Vec<Vec<f64>>| -> f64 {
            (0..n)
                .map(|j| (0..m).map(|i| h[j][i] * b.get(i, j)).sum::<f64>())
                .sum()
        };
        // Riemannian gradient of the trace under the embedded metric:
        // grad = B - H sym(H^T B). Stepping along it and re-orthonormalizing,
        // with backtracking for monotonicity, converges to the maximum.
        let gradient = |h: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            let mut g = vec![vec![0.0; n]; n];
            for a in 0..n {
                for c in 0..n {
                    g[a][c] = (0..m).map(|i| h[a][i] * b.get(i, c)).sum();
                }
            }
            (0..n)
                .map(|j| {
                    (0..m)
                        .map(|i| {
                            let normal: f64 = (0..n)
                                .map(|a| h[a][i] * 0.5 * (g[a][j] + g[j][a]))
                                .sum();
                            b.get(i, j) - normal
                        })
                        .collect()
                })
                .collect()
        };
        let mut step = 1.0 / b.frobenius_norm().max(1e-12);
        let mut best = trace_of(&h);
        for _ in 0..iters {
            let grad = gradient(&h);
            let mut trial = h.clone();
            for j in 0..n {
                for i in 0..m {
                    trial[j][i] += step * grad[j][i];
                }
            }
            orthonormalize(&mut trial);
            let t = trace_of(&trial);
            if t > best {
                best = t;
                h = trial;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-14 {
                    break;
                }
            }
        }
        best
    }

    #[test]
    fn svd_nuclear_norm_matches_ascent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..5 {
            let b = random_matrix(&mut rng, 6, 4);
            let sigma_sum: f64 = thin_svd(&b).unwrap().singular_values.iter().sum();
            let ascended = stiefel_ascent_trace(&b, 100 + trial, 4000);
            assert!(
                (sigma_sum - ascended).abs() < 1e-6 * (1.0 + sigma_sum),
                "trial {trial}: sigma sum {sigma_sum} vs ascent {ascended}"
            );
        }
    }
}
