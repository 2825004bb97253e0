use super::dense::{axpy, dot, DenseBlock};
use super::eigen::kernel_orthonormalize;
use super::LinalgError;
use crate::exec::Execution;

/// Default pivot tolerance, relative to the largest diagonal pivot.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

/// Columns handled together by the multi-RHS triangular solves.
const RHS_GROUP: usize = 8;

/// Symmetric pivoted Cholesky factorization `Pᵀ A P = L Lᵀ` of a positive
/// semidefinite matrix, truncated at the numerical rank. The trailing pivots
/// span the kernel, whose orthonormal basis is kept alongside the factor.
///
/// `pseudo_solve` returns the minimum-norm least-squares solution: the kernel
/// component of the right-hand side is removed before the solve and the
/// kernel component of the result afterwards.
#[derive(Clone, Debug)]
pub struct SymFactorization {
    order: usize,
    rank: usize,
    /// `perm[k]` is the original index eliminated at step `k`.
    perm: Vec<usize>,
    /// `order x rank`, column-major, rows in pivoted order; only the lower
    /// triangle of the leading `rank x rank` block is meaningful.
    l: Vec<f64>,
    kernel: DenseBlock,
    pivot_tolerance: f64,
}

pub fn factor_sym(a: &DenseBlock, pivot_tol: f64) -> Result<SymFactorization, LinalgError> {
    factor_sym_with(a, pivot_tol, Execution::default())
}

pub fn factor_sym_with(
    a: &DenseBlock,
    pivot_tol: f64,
    exec: Execution,
) -> Result<SymFactorization, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.cols(),
        });
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = a.max_abs();
    let asym = a.asymmetry();
    if asym > 1e-12 * scale {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asym,
            allowed: 1e-12 * scale,
        });
    }

    let mut w = a.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let max_diag = (0..n).map(|i| w[i + i * n]).fold(0.0_f64, f64::max);
    let threshold = pivot_tol * max_diag;
    let exec = if n < 96 { Execution::Sequential } else { exec };

    let mut rank = n;
    for k in 0..n {
        let (p, d) = (k..n)
            .map(|i| (i, w[i + i * n]))
            .fold(
                (k, f64::NEG_INFINITY),
                |best, c| if c.1 > best.1 { c } else { best },
            );
        if d <= threshold || max_diag <= 0.0 {
            // Remaining block must be numerically zero for a PSD matrix.
            for j in k..n {
                for i in j..n {
                    let v = w[i + j * n];
                    let bad = if i == j {
                        v < -threshold
                    } else {
                        v.abs() > threshold
                    };
                    if bad || (max_diag <= 0.0 && v != 0.0) {
                        return Err(LinalgError::IndefiniteMatrix { step: k, pivot: v });
                    }
                }
            }
            rank = k;
            break;
        }
        if p != k {
            swap_sym_lower(&mut w, n, k, p);
            perm.swap(k, p);
        }
        let lkk = d.sqrt();
        w[k + k * n] = lkk;
        for i in k + 1..n {
            w[i + k * n] /= lkk;
        }
        let (left, right) = w.split_at_mut((k + 1) * n);
        let lk = &left[k * n..];
        exec.for_each_chunk(right, n, |jj, col| {
            let j = k + 1 + jj;
            let ljk = lk[j];
            if ljk != 0.0 {
                axpy(-ljk, &lk[j..], &mut col[j..]);
            }
        });
    }

    w.truncate(n * rank);
    let mut f = SymFactorization {
        order: n,
        rank,
        perm,
        l: w,
        kernel: DenseBlock::zeros(n, 0),
        pivot_tolerance: pivot_tol,
    };
    if rank < n {
        f.kernel = f.compute_kernel(a);
    }
    Ok(f)
}

/// Symmetric swap of rows/columns `k < p` on lower-triangular storage.
fn swap_sym_lower(w: &mut [f64], n: usize, k: usize, p: usize) {
    for c in 0..k {
        w.swap(k + c * n, p + c * n);
    }
    w.swap(k + k * n, p + p * n);
    for i in k + 1..p {
        w.swap(i + k * n, p + i * n);
    }
    for i in p + 1..n {
        w.swap(i + k * n, i + p * n);
    }
}

impl SymFactorization {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn kernel_dim(&self) -> usize {
        self.order - self.rank
    }

    /// Orthonormal basis of the numerical kernel (`order x kernel_dim`).
    pub fn kernel_basis(&self) -> &DenseBlock {
        &self.kernel
    }

    pub fn pivot_tolerance(&self) -> f64 {
        self.pivot_tolerance
    }

    #[inline]
    fn lcol(&self, k: usize) -> &[f64] {
        &self.l[k * self.order..(k + 1) * self.order]
    }

    /// Null vectors `P [-L11⁻ᵀ L21ᵀ; I]`, refined once against `a` and then
    /// orthonormalized.
    fn compute_kernel(&self, a: &DenseBlock) -> DenseBlock {
        let (n, r) = (self.order, self.rank);
        let m = n - r;
        let mut basis = DenseBlock::zeros(n, m);
        for c in 0..m {
            // pivoted coordinates: x[0..r] solves L11ᵀ x = -L21ᵀ e_c
            let mut x: Vec<f64> = (0..r).map(|k| -self.lcol(k)[r + c]).collect();
            self.back_substitute(&mut x);
            let col = basis.col_mut(c);
            for k in 0..r {
                col[self.perm[k]] = x[k];
            }
            col[self.perm[r + c]] = 1.0;
        }
        // one correction step: remove the range component left by rounding
        for c in 0..m {
            let av = a.mul_vec(basis.col(c));
            let mut y: Vec<f64> = (0..r).map(|k| av[self.perm[k]]).collect();
            self.forward_substitute(&mut y);
            self.back_substitute(&mut y);
            let col = basis.col_mut(c);
            for k in 0..r {
                col[self.perm[k]] -= y[k];
            }
        }
        kernel_orthonormalize(&basis, 1e-12)
    }

    /// Solves `L11 y = c` in place (pivoted coordinates).
    fn forward_substitute(&self, c: &mut [f64]) {
        let r = self.rank;
        for k in 0..r {
            let lk = self.lcol(k);
            c[k] /= lk[k];
            let ck = c[k];
            if ck != 0.0 {
                axpy(-ck, &lk[k + 1..r], &mut c[k + 1..r]);
            }
        }
    }

    /// Solves `L11ᵀ x = y` in place (pivoted coordinates).
    fn back_substitute(&self, c: &mut [f64]) {
        let r = self.rank;
        for k in (0..r).rev() {
            let lk = self.lcol(k);
            c[k] = (c[k] - dot(&lk[k + 1..r], &c[k + 1..r])) / lk[k];
        }
    }

    fn project_out_kernel(&self, v: &mut [f64]) {
        if self.kernel.cols() == 0 {
            return;
        }
        let coeffs = self.kernel.tr_mul_vec(v);
        for (c, &s) in coeffs.iter().enumerate() {
            axpy(-s, self.kernel.col(c), v);
        }
    }

    /// Pseudo-inverse applied to one vector.
    pub fn pseudo_solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let block =
            self.pseudo_solve_block_with(&DenseBlock::column_vector(b), Execution::Sequential)?;
        Ok(block.into_vec())
    }

    pub fn pseudo_solve_block(&self, b: &DenseBlock) -> Result<DenseBlock, LinalgError> {
        self.pseudo_solve_block_with(b, Execution::default())
    }

    /// Pseudo-inverse applied to every column of `b`. Each column goes through
    /// exactly the same arithmetic as a single-vector solve, so the result is
    /// independent of batching and of the execution policy.
    pub fn pseudo_solve_block_with(
        &self,
        b: &DenseBlock,
        exec: Execution,
    ) -> Result<DenseBlock, LinalgError> {
        let n = self.order;
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        let mut out = b.clone();
        if n == 0 || b.cols() == 0 {
            return Ok(out);
        }
        let r = self.rank;
        exec.for_each_chunk(out.as_mut_slice(), RHS_GROUP * n, |_, chunk| {
            let g = chunk.len() / n;
            for col in chunk.chunks_mut(n) {
                self.project_out_kernel(col);
            }
            let mut work = vec![0.0; g * r];
            for (col, c) in chunk.chunks(n).zip(work.chunks_mut(r.max(1))) {
                for k in 0..r {
                    c[k] = col[self.perm[k]];
                }
            }
            if r > 0 {
                // forward, all columns of the group per pivot
                for k in 0..r {
                    let lk = self.lcol(k);
                    let (lkk, below) = (lk[k], &lk[k + 1..r]);
                    for c in work.chunks_mut(r) {
                        c[k] /= lkk;
                        let ck = c[k];
                        if ck != 0.0 {
                            axpy(-ck, below, &mut c[k + 1..r]);
                        }
                    }
                }
                for k in (0..r).rev() {
                    let lk = self.lcol(k);
                    let (lkk, below) = (lk[k], &lk[k + 1..r]);
                    for c in work.chunks_mut(r) {
                        c[k] = (c[k] - dot(below, &c[k + 1..r])) / lkk;
                    }
                }
            }
            for (col, c) in chunk.chunks_mut(n).zip(work.chunks(r.max(1))) {
                col.iter_mut().for_each(|x| *x = 0.0);
                for k in 0..r {
                    col[self.perm[k]] = c[k];
                }
                self.project_out_kernel(col);
            }
        });
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d_free(n: usize) -> DenseBlock {
        DenseBlock::from_fn(n, n, |i, j| {
            if i == j {
                if i == 0 || i == n - 1 {
                    1.0
                } else {
                    2.0
                }
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn identity_has_no_kernel() {
        let f = factor_sym(&DenseBlock::identity(3), 1e-12).unwrap();
        assert_eq!(f.kernel_dim(), 0);
        assert_eq!(
            f.pseudo_solve(&[1.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn free_laplacian_kernel_is_constant() {
        let n = 7;
        let f = factor_sym(&laplacian_1d_free(n), DEFAULT_PIVOT_TOL).unwrap();
        assert_eq!(f.kernel_dim(), 1);
        let k = f.kernel_basis().col(0);
        let c = 1.0 / (n as f64).sqrt();
        for &x in k {
            assert!((x.abs() - c).abs() < 1e-12, "{x}");
            assert_eq!(x.signum(), k[0].signum());
        }
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DenseBlock::from_col_major(2, 2, vec![1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(matches!(
            factor_sym(&a, 1e-10),
            Err(LinalgError::NotSymmetric { .. })
        ));
        let b = DenseBlock::from_col_major(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            factor_sym(&b, 1e-10),
            Err(LinalgError::IndefiniteMatrix { .. })
        ));
        let c = DenseBlock::from_col_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            factor_sym(&c, 1e-10),
            Err(LinalgError::IndefiniteMatrix { .. })
        ));
        let d = DenseBlock::zeros(2, 3);
        assert!(matches!(
            factor_sym(&d, 1e-10),
            Err(LinalgError::NotSquare { .. })
        ));
    }

    #[test]
    fn zero_matrix_is_all_kernel() {
        let f = factor_sym(&DenseBlock::zeros(3, 3), 1e-10).unwrap();
        assert_eq!(f.kernel_dim(), 3);
        assert_eq!(f.pseudo_solve(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn block_dimension_mismatch() {
        let f = factor_sym(&DenseBlock::identity(3), 1e-12).unwrap();
        assert!(matches!(
            f.pseudo_solve_block(&DenseBlock::zeros(4, 2)),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn least_squares_convention_drops_kernel_component() {
        let f = factor_sym(&laplacian_1d_free(5), DEFAULT_PIVOT_TOL).unwrap();
        // constant rhs lies entirely in the kernel
        let x = f.pseudo_solve(&[1.0; 5]).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-12));
    }
}
