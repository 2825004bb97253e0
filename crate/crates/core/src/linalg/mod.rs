//! Dense symmetric linear algebra at pattern scale.

mod dense;
mod eigen;
mod factor;

pub use dense::{axpy, dot, norm, DenseBlock};
pub use eigen::{inv_sqrt_sym, kernel_orthonormalize, DEFAULT_RANK_TOL};
pub use factor::{factor_sym, factor_sym_with, SymFactorization, DEFAULT_PIVOT_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric: max |A - Aᵀ| = {asymmetry:e} exceeds {allowed:e}")]
    NotSymmetric { asymmetry: f64, allowed: f64 },
    #[error("matrix is indefinite: entry {pivot:e} left at elimination step {step}")]
    IndefiniteMatrix { step: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error(
        "eigenvalue {min:e} below tolerance (largest {max:e}): positive semidefiniteness lost"
    )]
    NegativeEigenvalueBeyondTolerance { min: f64, max: f64 },
}
