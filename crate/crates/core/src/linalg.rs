//! Small dense linear-algebra helpers shared by the solvers and the oracles.

use nalgebra::{DMatrix, DVector};

/// Relative threshold for numerical rank decisions: `|det M| / prod_i ||row_i||`
/// for kernels, `sigma_min / sigma_max` for square solves.
pub const SINGULAR_TOL: f64 = 1e-9;

/// Product of the Euclidean row norms; Hadamard's bound on `|det M|`.
pub fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).product()
}

/// `|det M|` normalised by the Hadamard bound, in `[0, 1]`.
pub fn relative_det(m: &DMatrix<f64>) -> f64 {
    let h = hadamard_bound(m);
    if h == 0.0 {
        return 0.0;
    }
    (m.clone().lu().determinant() / h).abs()
}

/// Reciprocal 2-norm condition number `sigma_min / sigma_max`, 0 for the zero matrix.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

/// Singular when the condition number exceeds `1 / SINGULAR_TOL`. Nearly
/// parallel rows are fine as long as the matrix is well conditioned.
pub fn is_singular(m: &DMatrix<f64>) -> bool {
    rcond(m) <= SINGULAR_TOL
}

/// Solves `M x = rhs` by LU with one step of iterative refinement.
pub fn solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let lu = m.clone().lu();
    let mut x = lu.solve(rhs)?;
    let residual = rhs - m * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Solves `M^T y = rhs`.
pub fn solve_transpose(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    solve(&m.transpose(), rhs)
}

/// Unit vector spanning the kernel of a `k x (k+1)` matrix, computed as the
/// generalised cross product of its rows (signed maximal minors).
///
/// Returns `None` when the rows are (numerically) dependent.
pub fn null_vector(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let (k, cols) = m.shape();
    assert_eq!(cols, k + 1, "null_vector expects a k x (k+1) matrix");
    if k == 0 {
        return Some(DVector::from_element(1, 1.0));
    }
    let mut out = DVector::zeros(cols);
    for j in 0..cols {
        let minor = m.clone().remove_column(j);
        let det = minor.lu().determinant();
        out[j] = if j % 2 == 0 { det } else { -det };
    }
    let norm = out.norm();
    if norm == 0.0 || rcond(m) <= SINGULAR_TOL {
        return None;
    }
    Some(out / norm)
}

/// Orthonormal basis (as columns) of the row space of `m`.
pub fn row_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > SINGULAR_TOL * smax.max(1e-300))
        .map(|(i, _)| i)
        .collect();
    let mut basis = DMatrix::zeros(m.ncols(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &v_t.row(i).transpose());
    }
    basis
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    row_space_basis(m).ncols()
}

/// Rows of `m` selected by `idx`, in order.
pub fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Binomial coefficient as `f64` (exact for the desk-scale sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn null_vector_of_plane_rows() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let z = null_vector(&m).unwrap();
        assert_relative_eq!(z[2].abs(), 1.0, epsilon = 1e-12);
        assert!((&m * &z).norm() < 1e-12);
    }

    #[test]
    fn null_vector_rejects_dependent_rows() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(null_vector(&m).is_none());
    }

    #[test]
    fn refined_solve_matches_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let x = solve(&m, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rank_of_parallel_rows() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(rank(&m), 1);
        assert!(is_singular(&m));
    }

    #[test]
    fn clustered_rows_are_not_singular() {
        let d = 10;
        let m = DMatrix::from_fn(d, d, |i, j| {
            let spread = if i == j && i + 1 < d { 0.1 } else { 0.0 };
            if j + 1 == d { 4.0 } else { spread }
        });
        assert!(relative_det(&m) < 1e-9);
        assert!(!is_singular(&m));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(30, 3), 4060.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
