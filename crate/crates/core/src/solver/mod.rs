//! Iterative interface solvers: classical FETI PCG, the same iteration with
//! per-pattern batched Neumann solves, and the multivector variant.

mod classical;
mod coarse;
mod engine;
mod map;
mod multivector;

pub use classical::{solve_classical, solve_classical_mrhs};
pub use coarse::{build_coarse, build_coarse_with, CoarsePath, CoarseProblem};
pub use engine::recover_solution;
pub use map::{MultivectorMap, Recipe};
pub use multivector::{recipes_commute, solve_multivector};

use std::fmt;
use std::str::FromStr;

use crate::decomposition::{DecompositionError, Preconditioner};
use crate::linalg::{LinalgError, DEFAULT_RANK_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Mrhs,
    Multivector,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Classical, Method::Mrhs, Method::Multivector];

    pub fn name(self) -> &'static str {
        match self {
            Method::Classical => "classical",
            Method::Mrhs => "mrhs",
            Method::Multivector => "multivector",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Method::Classical),
            "mrhs" => Ok(Method::Mrhs),
            "multivector" => Ok(Method::Multivector),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub precond: Preconditioner,
    /// `M̃⁻¹` of the coarse projector; defaults to `precond`.
    pub coarse_precond: Option<Preconditioner>,
    pub coarse_path: CoarsePath,
    /// Stop when `‖r_j‖ / ‖r₀‖ <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
    /// Full reorthogonalization; `None` picks the engine default
    /// (off for classical, on for multivector).
    pub reorthogonalize: Option<bool>,
    /// Seed of the random probes of the commutation check.
    pub probe_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            precond: Preconditioner::Dirichlet,
            coarse_precond: None,
            coarse_path: CoarsePath::Auto,
            tol: 1e-8,
            max_iter: 500,
            rank_tol: DEFAULT_RANK_TOL,
            reorthogonalize: None,
            probe_seed: 0x5eed,
        }
    }
}

impl SolverOptions {
    pub fn coarse_kind(&self) -> Preconditioner {
        self.coarse_precond.unwrap_or(self.precond)
    }

    fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0) {
            return Err(SolveError::InvalidOptions(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        if !(self.rank_tol > 0.0) {
            return Err(SolveError::InvalidOptions(format!(
                "rank_tol must be > 0, got {}",
                self.rank_tol
            )));
        }
        Ok(())
    }
}

/// Per-iteration history. Index 0 is the initial state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceRecord {
    pub method: Option<Method>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    /// Search directions kept at each iteration (after rank filtering).
    pub active_directions: Vec<usize>,
    /// Directions dropped by rank filtering at each iteration.
    pub dropped_directions: Vec<usize>,
    /// Neumann solve batches issued so far.
    pub cum_local_solve_batches: Vec<usize>,
    pub wall_ms: Vec<f64>,
    /// `‖Gᵀ λ_j - e‖∞`.
    pub constraint_residuals: Vec<f64>,
    /// Multivector only: the single vector was orthogonalized before expansion.
    pub single_vector_reorth: bool,
}

impl ConvergenceRecord {
    pub fn relative_residuals(&self) -> Vec<f64> {
        let r0 = self.residual_norms.first().copied().unwrap_or(0.0);
        self.residual_norms
            .iter()
            .map(|&r| if r0 > 0.0 { r / r0 } else { 0.0 })
            .collect()
    }

    /// Neumann batches issued by iteration `j` alone.
    pub fn batches_per_iteration(&self) -> Vec<usize> {
        self.cum_local_solve_batches
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect()
    }
}

/// Interface multipliers, recovered displacements and the history.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub lambda: Vec<f64>,
    /// Per occurrence, over the pattern's free dofs, in the pattern frame.
    pub u: Vec<Vec<f64>>,
    /// Rigid amplitudes: `u = K⁺(f - tᵀBᵀλ) + R α`.
    pub alpha: Vec<f64>,
    pub record: ConvergenceRecord,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(
        "no convergence after {iterations} iterations (relative residual {relative_residual:.3e})"
    )]
    MaxIterationsExceeded {
        iterations: usize,
        relative_residual: f64,
        partial: Box<Solution>,
    },
    #[error("breakdown at iteration {iteration}: w·Fw = {value:.3e}")]
    BreakdownZeroDenominator { iteration: usize, value: f64 },
    #[error("every search direction was filtered at iteration {iteration} (relative residual {relative_residual:.3e})")]
    TotalRankCollapse {
        iteration: usize,
        relative_residual: f64,
    },
    #[error("coarse Gram matrix of size {size} has rank {rank}")]
    SingularCoarseGram { size: usize, rank: usize },
    #[error("multivector map does not fit the model: {0}")]
    TopologyMismatch(String),
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
