use nalgebra::SymmetricEigen;

use super::dense::{axpy, dot, norm, DenseBlock};
use super::LinalgError;

/// Default relative eigenvalue cut for [`inv_sqrt_sym`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Orthonormal basis of the numerically significant column space of `r`.
///
/// Singular values below `tol * sigma_max` are dropped; the zero matrix gives
/// a zero-width result.
pub fn kernel_orthonormalize(r: &DenseBlock, tol: f64) -> DenseBlock {
    let rows = r.rows();
    if r.cols() == 0 || r.max_abs() == 0.0 {
        return DenseBlock::zeros(rows, 0);
    }
    let gram = r.tr_mul(r);
    let eig = SymmetricEigen::new(gram.to_nalgebra());
    let smax2 = eig.eigenvalues.iter().fold(0.0_f64, |m, &x| m.max(x));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DenseBlock::zeros(rows, 0);
    for &k in &order {
        let s2 = eig.eigenvalues[k];
        if s2 <= 0.0 || s2.sqrt() < tol * smax2.sqrt() {
            continue;
        }
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let mut q = r.mul_vec(&v);
        // re-orthogonalize against accepted columns (two passes)
        for _ in 0..2 {
            for c in 0..out.cols() {
                let s = dot(out.col(c), &q);
                axpy(-s, out.col(c), &mut q);
            }
        }
        let nq = norm(&q);
        if nq == 0.0 || nq < tol * smax2.sqrt() {
            continue;
        }
        q.iter_mut().for_each(|x| *x /= nq);
        canonical_sign(&mut q);
        out.push_column(&q);
    }
    out
}

/// Flips `v` so its largest-magnitude entry is positive.
fn canonical_sign(v: &mut [f64]) {
    let (mut best, mut val) = (0.0_f64, 0.0);
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            val = x;
        }
    }
    if val < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Inverse square root of a small symmetric positive semidefinite matrix,
/// restricted to its numerical range.
///
/// Returns `(N, rank)` with `Nᵀ M N = I_rank`. Eigenvalues below
/// `rank_tol * lambda_max` are discarded. When nothing is discarded `N` is the
/// symmetric `M^{-1/2}`; otherwise `N = V_k Λ_k^{-1/2}` with `rank` columns.
pub fn inv_sqrt_sym(m: &DenseBlock, rank_tol: f64) -> Result<(DenseBlock, usize), LinalgError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: m.cols(),
        });
    }
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if n == 0 {
        return Ok((DenseBlock::zeros(0, 0), 0));
    }
    // symmetrize; callers hand in Gram matrices with rounding asymmetry
    let sym = DenseBlock::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
    let eig = SymmetricEigen::new(sym.to_nalgebra());
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    if lmax <= 0.0 {
        if lmin < 0.0 {
            return Err(LinalgError::NegativeEigenvalueBeyondTolerance {
                min: lmin,
                max: lmax,
            });
        }
        return Ok((DenseBlock::zeros(n, 0), 0));
    }
    if lmin < -rank_tol * lmax {
        return Err(LinalgError::NegativeEigenvalueBeyondTolerance {
            min: lmin,
            max: lmax,
        });
    }
    let mut kept: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > rank_tol * lmax)
        .collect();
    kept.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let rank = kept.len();
    let mut half = DenseBlock::zeros(n, rank);
    for (c, &k) in kept.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[k].sqrt();
        let col = half.col_mut(c);
        for i in 0..n {
            col[i] = eig.eigenvectors[(i, k)] * s;
        }
        if rank < n {
            canonical_sign(col);
        }
    }
    if rank == n {
        // V Λ^{-1/2} Vᵀ
        let v = DenseBlock::from_fn(n, rank, |i, c| eig.eigenvectors[(i, kept[c])]);
        return Ok((half.mul(&v.transpose()), rank));
    }
    Ok((half, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_columns_collapse() {
        let r = DenseBlock::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let q = kernel_orthonormalize(&r, 1e-12);
        assert_eq!(q.cols(), 1);
        assert!((q.get(0, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_gives_empty_basis() {
        assert_eq!(
            kernel_orthonormalize(&DenseBlock::zeros(4, 2), 1e-12).cols(),
            0
        );
    }

    #[test]
    fn scaled_identity() {
        let mut m = DenseBlock::identity(3);
        m.scale(4.0);
        let (n, rank) = inv_sqrt_sym(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rank, 3);
        let mut half = DenseBlock::identity(3);
        half.scale(0.5);
        assert!(n.sub(&half).max_abs() < 1e-15);
    }

    #[test]
    fn rank_filtering() {
        let m = DenseBlock::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 1e-18]).unwrap();
        let (n, rank) = inv_sqrt_sym(&m, 1e-12).unwrap();
        assert_eq!(rank, 1);
        assert_eq!((n.rows(), n.cols()), (2, 1));
        assert!((n.get(0, 0) - 1.0).abs() < 1e-15);
        assert!(n.get(1, 0).abs() < 1e-15);
    }

    #[test]
    fn negative_eigenvalue_is_breakdown() {
        let m = DenseBlock::from_col_major(2, 2, vec![1.0, 0.0, 0.0, -0.5]).unwrap();
        assert!(matches!(
            inv_sqrt_sym(&m, 1e-8),
            Err(LinalgError::NegativeEigenvalueBeyondTolerance { .. })
        ));
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let (n, rank) = inv_sqrt_sym(&DenseBlock::zeros(3, 3), 1e-8).unwrap();
        assert_eq!(rank, 0);
        assert_eq!(n.cols(), 0);
    }
}
