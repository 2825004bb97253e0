use super::SolveError;
use crate::decomposition::{DecompositionError, Preconditioner, RigidModes, StructureModel};
use crate::linalg::{factor_sym, DenseBlock, SymFactorization};

/// Relative pivot threshold below which the coarse Gram matrix is declared singular.
const GRAM_PIVOT_TOL: f64 = 1e-10;

/// Which route assembles `Gᵀ M̃⁻¹ G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoarsePath {
    /// Repeated pattern block when the layout allows it, generic otherwise.
    #[default]
    Auto,
    Generic,
}

/// Rigid-mode constraint `Gᵀ λ = e` with projector
/// `Q = I - M̃⁻¹G (GᵀM̃⁻¹G)⁻¹ Gᵀ`.
#[derive(Clone, Debug)]
pub struct CoarseProblem {
    pub modes: RigidModes,
    /// `M̃⁻¹ G`
    pub mg: DenseBlock,
    pub gram: DenseBlock,
    pub kind: Preconditioner,
    /// True when the Gram matrix came from the repeated pattern block.
    pub from_block: bool,
    factor: Option<SymFactorization>,
}

pub fn build_coarse(
    model: &StructureModel,
    kind: Preconditioner,
) -> Result<CoarseProblem, SolveError> {
    build_coarse_with(model, kind, CoarsePath::Auto)
}

pub fn build_coarse_with(
    model: &StructureModel,
    kind: Preconditioner,
    path: CoarsePath,
) -> Result<CoarseProblem, SolveError> {
    let modes = model.rigid_modes();
    let m = modes.columns.len();
    if m == 0 {
        return Ok(CoarseProblem {
            modes,
            mg: DenseBlock::zeros(model.n_lambda(), 0),
            gram: DenseBlock::zeros(0, 0),
            kind,
            from_block: false,
            factor: None,
        });
    }
    let mg = model.preconditioner_apply(kind, &modes.g)?;
    let block = match path {
        CoarsePath::Generic => None,
        CoarsePath::Auto => match model.build_g_block(&modes) {
            Ok(gb) => Some(model.coarse_gram_from_block(&gb, kind, &modes)?),
            Err(DecompositionError::MixedPatterns | DecompositionError::IrregularLayout(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let from_block = block.is_some();
    let mut gram = block.unwrap_or_else(|| modes.g.tr_mul(&mg));
    // symmetrize the rounding so the factorization accepts it
    for j in 0..m {
        for i in 0..j {
            let v = 0.5 * (gram.get(i, j) + gram.get(j, i));
            gram.set(i, j, v);
            gram.set(j, i, v);
        }
    }
    let factor = factor_sym(&gram, GRAM_PIVOT_TOL)?;
    if factor.kernel_dim() > 0 {
        return Err(SolveError::SingularCoarseGram {
            size: m,
            rank: factor.rank(),
        });
    }
    Ok(CoarseProblem {
        modes,
        mg,
        gram,
        kind,
        from_block,
        factor: Some(factor),
    })
}

impl CoarseProblem {
    pub fn n_modes(&self) -> usize {
        self.modes.columns.len()
    }

    pub fn g(&self) -> &DenseBlock {
        &self.modes.g
    }

    fn gram_solve(&self, b: &DenseBlock) -> DenseBlock {
        match &self.factor {
            Some(f) => f
                .pseudo_solve_block(b)
                .expect("sizes match by construction"),
            None => b.clone(),
        }
    }

    /// `(GᵀM̃⁻¹G)⁻¹ (M̃⁻¹G)ᵀ x`
    pub fn amplitudes(&self, x: &DenseBlock) -> DenseBlock {
        self.gram_solve(&self.mg.tr_mul(x))
    }

    /// `Q x`
    pub fn project(&self, x: &DenseBlock) -> DenseBlock {
        if self.n_modes() == 0 {
            return x.clone();
        }
        let c = self.gram_solve(&self.modes.g.tr_mul(x));
        let mut out = x.clone();
        out.add_scaled(-1.0, &self.mg.mul(&c));
        out
    }

    /// `Qᵀ x`
    pub fn project_t(&self, x: &DenseBlock) -> DenseBlock {
        if self.n_modes() == 0 {
            return x.clone();
        }
        let c = self.amplitudes(x);
        let mut out = x.clone();
        out.add_scaled(-1.0, &self.modes.g.mul(&c));
        out
    }

    pub fn project_vec(&self, x: &[f64]) -> Vec<f64> {
        self.project(&DenseBlock::column_vector(x)).into_vec()
    }

    pub fn project_t_vec(&self, x: &[f64]) -> Vec<f64> {
        self.project_t(&DenseBlock::column_vector(x)).into_vec()
    }

    /// `λ₀ = M̃⁻¹G (GᵀM̃⁻¹G)⁻¹ e`, so that `Gᵀ λ₀ = e`.
    pub fn initial_lambda(&self, e: &[f64]) -> Vec<f64> {
        if self.n_modes() == 0 {
            return vec![0.0; self.mg.rows()];
        }
        let c = self.gram_solve(&DenseBlock::column_vector(e));
        self.mg.mul_vec(c.col(0))
    }

    /// `‖Gᵀ λ - e‖∞`
    pub fn constraint_residual(&self, lambda: &[f64], e: &[f64]) -> f64 {
        self.modes
            .g
            .tr_mul_vec(lambda)
            .iter()
            .zip(e)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
