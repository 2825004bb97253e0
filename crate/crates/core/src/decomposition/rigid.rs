use super::interface::rotate_add;
use super::operators::Preconditioner;
use super::{DecompositionError, StructureModel};
use crate::fem::LoadCase;
use crate::linalg::{dot, DenseBlock};

/// `G = [B t R]` over all floating occurrences.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidModes {
    pub g: DenseBlock,
    /// `(occurrence, mode)` of each column of `g`.
    pub columns: Vec<(usize, usize)>,
    /// First column of each occurrence, `None` when it does not float.
    pub first_column: Vec<Option<usize>>,
}

/// The interface trace of the modes reaching one occurrence, identical (in
/// the pattern frame) for every floating occurrence of a repeated pattern.
///
/// Column groups of `kernel_dim` columns: the occurrence's own modes, then
/// for each glued side the modes of the neighbor across it.
#[derive(Clone, Debug, PartialEq)]
pub struct GBlock {
    pub block: DenseBlock,
    pub reference: usize,
    pub kernel_dim: usize,
    /// Per occurrence, the occurrence owning each column group.
    pub layout: Vec<Vec<usize>>,
}

impl StructureModel {
    pub fn rigid_modes(&self) -> RigidModes {
        let dpn = self.dofs_per_node();
        let mut columns = Vec::new();
        let mut first_column = vec![None; self.occurrences.len()];
        for o in 0..self.occurrences.len() {
            let k = self.occurrence_pattern(o).kernel_dim();
            if k > 0 {
                first_column[o] = Some(columns.len());
                columns.extend((0..k).map(|m| (o, m)));
            }
        }
        let mut g = DenseBlock::zeros(self.n_lambda, columns.len());
        for (j, &(o, m)) in columns.iter().enumerate() {
            let pat = self.occurrence_pattern(o);
            let r = pat.factor().kernel_basis().col(m);
            let (cs, sn) = self.rotations[o];
            let col = g.col_mut(j);
            for &s in &self.occurrences[o].active_sides {
                let (k, sign) = self.side_links[o][s].expect("active side is linked");
                let itf = &self.interfaces[k];
                let tr: Vec<f64> = pat.sides()[s].dofs.iter().map(|&d| r[d]).collect();
                rotate_add(
                    dpn,
                    cs,
                    sn,
                    sign,
                    false,
                    &tr,
                    &mut col[itf.offset..itf.offset + itf.len],
                );
            }
        }
        RigidModes {
            g,
            columns,
            first_column,
        }
    }

    /// `e = [Rᵀ f]`, ordered like the columns of [`StructureModel::rigid_modes`].
    pub fn rigid_rhs(
        &self,
        modes: &RigidModes,
        loads: &LoadCase,
    ) -> Result<Vec<f64>, DecompositionError> {
        if loads.forces.len() != self.occurrences.len() {
            return Err(DecompositionError::DimensionMismatch {
                expected: self.occurrences.len(),
                found: loads.forces.len(),
            });
        }
        modes
            .columns
            .iter()
            .map(|&(o, m)| {
                let r = self.occurrence_pattern(o).factor().kernel_basis().col(m);
                let f = &loads.forces[o];
                if f.len() != r.len() {
                    return Err(DecompositionError::DimensionMismatch {
                        expected: r.len(),
                        found: f.len(),
                    });
                }
                Ok(dot(r, f))
            })
            .collect()
    }

    /// Rows of the `G` traces seen by occurrence `o`, in its pattern frame.
    fn local_g_block(
        &self,
        o: usize,
        scattered: &super::InterfaceBlock,
        modes: &RigidModes,
    ) -> (DenseBlock, Vec<usize>) {
        let pat = self.occurrence_pattern(o);
        let offs = pat.side_offsets();
        let k = pat.kernel_dim();
        let active = &self.occurrences[o].active_sides;
        let mut owners = vec![o];
        let mut block = DenseBlock::zeros(pat.interface_len(), k * (1 + active.len()));
        let own = modes.first_column[o].expect("floating");
        for m in 0..k {
            let src = scattered.column(self, o, own + m);
            let dst = block.col_mut(m);
            for &s in active {
                let r = offs[s]..offs[s] + pat.sides()[s].dofs.len();
                dst[r.clone()].copy_from_slice(&src[r]);
            }
        }
        for (g, &s) in active.iter().enumerate() {
            let q = self
                .neighbor(o, s)
                .expect("active side is linked")
                .occurrence;
            owners.push(q);
            let Some(first) = modes.first_column[q] else {
                continue;
            };
            for m in 0..k {
                let src = scattered.column(self, o, first + m);
                let dst = block.col_mut((g + 1) * k + m);
                let r = offs[s]..offs[s] + pat.sides()[s].dofs.len();
                dst[r.clone()].copy_from_slice(&src[r]);
            }
        }
        (block, owners)
    }

    /// Builds the repeated block of `tᵀ Bᵀ G`. Requires every occurrence to
    /// float, to come from one pattern and to be glued the same way.
    pub fn build_g_block(&self, modes: &RigidModes) -> Result<GBlock, DecompositionError> {
        let floating = self.floating_occurrences();
        if floating.is_empty() {
            return Ok(GBlock {
                block: DenseBlock::zeros(0, 0),
                reference: 0,
                kernel_dim: 0,
                layout: Vec::new(),
            });
        }
        let p0 = self.occurrences[floating[0]].pattern;
        if floating.iter().any(|&o| self.occurrences[o].pattern != p0) {
            return Err(DecompositionError::MixedPatterns);
        }
        if floating.len() != self.occurrences.len() {
            return Err(DecompositionError::IrregularLayout(
                "some occurrences do not float".into(),
            ));
        }
        if self.groups.len() != 1 {
            return Err(DecompositionError::IrregularLayout(
                "occurrences are glued along different sides".into(),
            ));
        }
        let scattered = self.scatter_block(&modes.g)?;
        let reference = floating[0];
        let (block, _) = self.local_g_block(reference, &scattered, modes);
        let scale = block.max_abs().max(f64::MIN_POSITIVE);
        let mut layout = Vec::with_capacity(floating.len());
        for &o in &floating {
            let (b, owners) = self.local_g_block(o, &scattered, modes);
            if b.sub(&block).max_abs() > 1e-10 * scale {
                return Err(DecompositionError::IrregularLayout(format!(
                    "occurrence {o} sees different rigid-mode traces than occurrence {reference}"
                )));
            }
            layout.push(owners);
        }
        Ok(GBlock {
            block,
            reference,
            kernel_dim: self.occurrence_pattern(reference).kernel_dim(),
            layout,
        })
    }

    /// `Gᵀ M̃⁻¹ G` assembled from the repeated block: one local operator
    /// application instead of one per occurrence.
    pub fn coarse_gram_from_block(
        &self,
        gb: &GBlock,
        kind: Preconditioner,
        modes: &RigidModes,
    ) -> Result<DenseBlock, DecompositionError> {
        let m = modes.columns.len();
        let mut gram = DenseBlock::zeros(m, m);
        if gb.kernel_dim == 0 {
            return Ok(gram);
        }
        let group = &self.groups[self.occurrence_group[gb.reference]];
        let d = &self.scaling[gb.reference];
        let x = DenseBlock::from_fn(group.boundary_rows.len(), gb.block.cols(), |i, j| {
            let r = group.boundary_rows[i];
            d[r] * gb.block.get(r, j)
        });
        let y = self.apply_local(group, kind, &x)?;
        let h = x.tr_mul(&y);
        let k = gb.kernel_dim;
        for owners in &gb.layout {
            for (gi, &qi) in owners.iter().enumerate() {
                let Some(ci) = modes.first_column[qi] else {
                    continue;
                };
                for (gj, &qj) in owners.iter().enumerate() {
                    let Some(cj) = modes.first_column[qj] else {
                        continue;
                    };
                    for a in 0..k {
                        for b in 0..k {
                            gram.add_at(ci + a, cj + b, h.get(gi * k + a, gj * k + b));
                        }
                    }
                }
            }
        }
        Ok(gram)
    }
}
