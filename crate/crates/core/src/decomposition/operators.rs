use super::interface::{Combine, InterfaceBlock};
use super::model::LocalGroup;
use super::{DecompositionError, StructureModel};
use crate::exec::Execution;
use crate::fem::LoadCase;
use crate::linalg::DenseBlock;

/// How Neumann solves are grouped when applying the dual operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Batching {
    /// One multi-RHS solve per pattern covering all of its occurrences.
    #[default]
    PerPattern,
    /// One solve per occurrence, as a plain FETI code would do.
    PerOccurrence,
}

/// Local operator `M⁽ˢ⁾` of the dual preconditioner `Σ B t D M D tᵀ Bᵀ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    /// Boundary Schur complement `K_bb - K_bi K_ii⁻¹ K_ib`.
    #[default]
    Dirichlet,
    /// `K_bb`.
    Lumped,
    /// `diag(K_bb)`.
    Superlumped,
    /// Identity on the boundary.
    Identity,
}

impl std::str::FromStr for Preconditioner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Preconditioner::Dirichlet),
            "lumped" => Ok(Preconditioner::Lumped),
            "superlumped" => Ok(Preconditioner::Superlumped),
            "identity" => Ok(Preconditioner::Identity),
            other => Err(format!("unknown preconditioner '{other}'")),
        }
    }
}

impl StructureModel {
    /// Copies interface rows of every column into the pattern's dof space.
    fn embed(&self, p: usize, w: &DenseBlock) -> DenseBlock {
        let pat = &self.patterns[p];
        let offs = pat.side_offsets();
        let mut rhs = DenseBlock::zeros(pat.n_dofs(), w.cols());
        for c in 0..w.cols() {
            let (src, dst) = (w.col(c), rhs.col_mut(c));
            for (side, &off) in pat.sides().iter().zip(&offs) {
                for (i, &d) in side.dofs.iter().enumerate() {
                    dst[d] += src[off + i];
                }
            }
        }
        rhs
    }

    /// Traces of pattern-space columns on the glued sides of their occurrence.
    fn traces(&self, p: usize, u: &DenseBlock) -> DenseBlock {
        let pat = &self.patterns[p];
        let offs = pat.side_offsets();
        let occ = &self.pattern_occurrences[p];
        let mut out = DenseBlock::zeros(pat.interface_len(), u.cols());
        for c in 0..u.cols() {
            let o = occ[c % occ.len()];
            let (src, dst) = (u.col(c), out.col_mut(c));
            for &s in &self.occurrences[o].active_sides {
                for (i, &d) in pat.sides()[s].dofs.iter().enumerate() {
                    dst[offs[s] + i] = src[d];
                }
            }
        }
        out
    }

    /// `K⁺` applied to pattern-space columns laid out like an interface
    /// block. Returns the solutions and the number of solve batches issued.
    pub(crate) fn pseudo_solve_patterns(
        &self,
        rhs: &[DenseBlock],
        batching: Batching,
    ) -> Result<(Vec<DenseBlock>, usize), DecompositionError> {
        let mut batches = 0;
        let mut out = Vec::with_capacity(rhs.len());
        for (p, b) in rhs.iter().enumerate() {
            let f = self.patterns[p].factor();
            if b.cols() == 0 {
                out.push(b.clone());
                continue;
            }
            match batching {
                Batching::PerPattern => {
                    out.push(f.pseudo_solve_block_with(b, self.exec)?);
                    batches += 1;
                }
                Batching::PerOccurrence => {
                    let n_occ = self.pattern_occurrences[p].len();
                    let n_vec = b.cols() / n_occ;
                    let idx =
                        |l: usize| -> Vec<usize> { (0..n_vec).map(|c| c * n_occ + l).collect() };
                    let solved = self.exec.map(n_occ, |l| {
                        f.pseudo_solve_block_with(&b.select_columns(&idx(l)), Execution::Sequential)
                    });
                    let mut x = DenseBlock::zeros(b.rows(), b.cols());
                    for (l, s) in solved.into_iter().enumerate() {
                        let s = s?;
                        for (k, j) in idx(l).into_iter().enumerate() {
                            x.col_mut(j).copy_from_slice(s.col(k));
                        }
                    }
                    out.push(x);
                    batches += n_occ;
                }
            }
        }
        Ok((out, batches))
    }

    /// `F b = Σ B t K⁺ tᵀ Bᵀ b`, one Neumann batch per pattern.
    pub fn dual_operator_apply(&self, b: &DenseBlock) -> Result<DenseBlock, DecompositionError> {
        Ok(self.dual_operator_apply_counted(b, Batching::PerPattern)?.0)
    }

    /// `F b` together with the number of Neumann solve batches it took.
    pub fn dual_operator_apply_counted(
        &self,
        b: &DenseBlock,
        batching: Batching,
    ) -> Result<(DenseBlock, usize), DecompositionError> {
        let w = self.scatter_block(b)?;
        let rhs: Vec<DenseBlock> = w
            .blocks
            .iter()
            .enumerate()
            .map(|(p, blk)| self.embed(p, blk))
            .collect();
        let (u, batches) = self.pseudo_solve_patterns(&rhs, batching)?;
        let y = InterfaceBlock {
            blocks: u
                .iter()
                .enumerate()
                .map(|(p, x)| self.traces(p, x))
                .collect(),
            n_vectors: b.cols(),
        };
        Ok((self.gather_block(&y, Combine::Sum)?, batches))
    }

    /// Applies one group's local operator to boundary columns.
    pub(crate) fn apply_local(
        &self,
        group: &LocalGroup,
        kind: Preconditioner,
        x: &DenseBlock,
    ) -> Result<DenseBlock, DecompositionError> {
        let pat = &self.patterns[group.pattern];
        Ok(match kind {
            Preconditioner::Identity => x.clone(),
            Preconditioner::Lumped => group.kbb(pat).mul(x),
            Preconditioner::Superlumped => {
                let kbb = group.kbb(pat);
                DenseBlock::from_fn(x.rows(), x.cols(), |i, j| kbb.get(i, i) * x.get(i, j))
            }
            Preconditioner::Dirichlet => {
                let mut y = group.kbb(pat).mul(x);
                if !group.interior.is_empty() {
                    let (kib, kii) = group.dirichlet_parts(pat, self.exec)?;
                    let z = kii.pseudo_solve_block_with(&kib.mul(x), self.exec)?;
                    y.add_scaled(-1.0, &kib.tr_mul(&z));
                }
                y
            }
        })
    }

    /// `M⁻¹ b = Σ B t D M D tᵀ Bᵀ b` with multiplicity scaling `D`.
    pub fn preconditioner_apply(
        &self,
        kind: Preconditioner,
        b: &DenseBlock,
    ) -> Result<DenseBlock, DecompositionError> {
        let mut w = self.scatter_block(b)?;
        let n_vec = b.cols();
        let results = self.exec.map(self.groups.len(), |g| {
            let group = &self.groups[g];
            let nb = group.boundary_rows.len();
            let mut x = DenseBlock::zeros(nb, group.occurrences.len() * n_vec);
            for (k, &o) in group.occurrences.iter().enumerate() {
                let d = &self.scaling[o];
                for c in 0..n_vec {
                    let src = w.column(self, o, c);
                    let dst = x.col_mut(c * group.occurrences.len() + k);
                    for (i, &r) in group.boundary_rows.iter().enumerate() {
                        dst[i] = d[r] * src[r];
                    }
                }
            }
            self.apply_local(group, kind, &x)
        });
        for (g, y) in results.into_iter().enumerate() {
            let y = y?;
            let group = &self.groups[g];
            for (k, &o) in group.occurrences.iter().enumerate() {
                for c in 0..n_vec {
                    let src = y.col(c * group.occurrences.len() + k);
                    let d = &self.scaling[o];
                    let dst = w.column_mut(self, o, c);
                    for (i, &r) in group.boundary_rows.iter().enumerate() {
                        dst[r] = d[r] * src[i];
                    }
                }
            }
        }
        self.gather_block(&w, Combine::Sum)
    }

    fn check_loads(&self, loads: &LoadCase) -> Result<(), DecompositionError> {
        if loads.forces.len() != self.occurrences.len() {
            return Err(DecompositionError::DimensionMismatch {
                expected: self.occurrences.len(),
                found: loads.forces.len(),
            });
        }
        for (o, f) in loads.forces.iter().enumerate() {
            let n = self.occurrence_pattern(o).n_dofs();
            if f.len() != n {
                return Err(DecompositionError::DimensionMismatch {
                    expected: n,
                    found: f.len(),
                });
            }
        }
        Ok(())
    }

    fn load_blocks(&self, loads: &LoadCase) -> Vec<DenseBlock> {
        (0..self.patterns.len())
            .map(|p| {
                let occ = &self.pattern_occurrences[p];
                let n = self.patterns[p].n_dofs();
                let mut b = DenseBlock::zeros(n, occ.len());
                for (l, &o) in occ.iter().enumerate() {
                    b.col_mut(l).copy_from_slice(&loads.forces[o]);
                }
                b
            })
            .collect()
    }

    /// `d = Σ B t K⁺ f` and the number of solve batches.
    pub fn natural_rhs(&self, loads: &LoadCase) -> Result<(Vec<f64>, usize), DecompositionError> {
        self.natural_rhs_with(loads, Batching::PerPattern)
    }

    pub fn natural_rhs_with(
        &self,
        loads: &LoadCase,
        batching: Batching,
    ) -> Result<(Vec<f64>, usize), DecompositionError> {
        self.check_loads(loads)?;
        let (u, batches) = self.pseudo_solve_patterns(&self.load_blocks(loads), batching)?;
        let y = InterfaceBlock {
            blocks: u
                .iter()
                .enumerate()
                .map(|(p, x)| self.traces(p, x))
                .collect(),
            n_vectors: 1,
        };
        Ok((self.gather(&y, Combine::Sum)?, batches))
    }

    /// `K⁺ (f - tᵀ Bᵀ λ)` for every occurrence, in pattern frames.
    pub fn local_displacements(
        &self,
        loads: &LoadCase,
        lambda: &[f64],
    ) -> Result<Vec<Vec<f64>>, DecompositionError> {
        self.check_loads(loads)?;
        let w = self.scatter(lambda)?;
        let mut rhs = self.load_blocks(loads);
        for (p, r) in rhs.iter_mut().enumerate() {
            r.add_scaled(-1.0, &self.embed(p, &w.blocks[p]));
        }
        let (u, _) = self.pseudo_solve_patterns(&rhs, Batching::PerPattern)?;
        Ok((0..self.occurrences.len())
            .map(|o| {
                u[self.occurrences[o].pattern]
                    .col(self.local_index[o])
                    .to_vec()
            })
            .collect())
    }

    /// `Σ B t u⁽ˢ⁾`: the displacement jump across every interface.
    pub fn interface_jump(&self, u: &[Vec<f64>]) -> Result<Vec<f64>, DecompositionError> {
        let u = LoadCase {
            forces: u.to_vec(),
            seed: None,
        };
        self.check_loads(&u)?;
        let y = InterfaceBlock {
            blocks: self
                .load_blocks(&u)
                .iter()
                .enumerate()
                .map(|(p, x)| self.traces(p, x))
                .collect(),
            n_vectors: 1,
        };
        self.gather(&y, Combine::Sum)
    }
}
