use super::{DecompositionError, StructureModel};
use crate::linalg::DenseBlock;

/// Interface data laid out per pattern: block `p` has one row per side dof of
/// pattern `p` and one column per (input column, occurrence of `p`), the
/// occurrence index running fastest. Rows of sides that are not glued stay 0.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceBlock {
    pub blocks: Vec<DenseBlock>,
    pub n_vectors: usize,
}

impl InterfaceBlock {
    pub fn zeros(model: &StructureModel, n_vectors: usize) -> Self {
        InterfaceBlock {
            blocks: model
                .patterns
                .iter()
                .zip(&model.pattern_occurrences)
                .map(|(p, occ)| DenseBlock::zeros(p.interface_len(), occ.len() * n_vectors))
                .collect(),
            n_vectors,
        }
    }

    /// Column of occurrence `o` for input column `c`.
    pub fn column(&self, model: &StructureModel, o: usize, c: usize) -> &[f64] {
        let p = model.occurrences[o].pattern;
        let n_occ = model.pattern_occurrences[p].len();
        self.blocks[p].col(c * n_occ + model.local_index[o])
    }

    pub fn column_mut(&mut self, model: &StructureModel, o: usize, c: usize) -> &mut [f64] {
        let p = model.occurrences[o].pattern;
        let n_occ = model.pattern_occurrences[p].len();
        self.blocks[p].col_mut(c * n_occ + model.local_index[o])
    }
}

/// How the two contributions of an interface are merged by [`StructureModel::gather`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    /// Signed sum, the assembly `Σ B t x`.
    Sum,
    /// Half the signed sum; undoes a scatter.
    Average,
}

/// `dst += sign * R(angle) src` on node-major segments (`transpose` uses `Rᵀ`).
pub(crate) fn rotate_add(
    dpn: usize,
    c: f64,
    s: f64,
    sign: f64,
    transpose: bool,
    src: &[f64],
    dst: &mut [f64],
) {
    if dpn == 1 || (c == 1.0 && s == 0.0) {
        for (d, x) in dst.iter_mut().zip(src) {
            *d += sign * x;
        }
        return;
    }
    let s = if transpose { -s } else { s };
    for (d, x) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
        d[0] += sign * (c * x[0] - s * x[1]);
        d[1] += sign * (s * x[0] + c * x[1]);
    }
}

impl StructureModel {
    fn check_rows(&self, rows: usize) -> Result<(), DecompositionError> {
        if rows != self.n_lambda {
            return Err(DecompositionError::DimensionMismatch {
                expected: self.n_lambda,
                found: rows,
            });
        }
        Ok(())
    }

    /// `tᵀ Bᵀ v` for every occurrence: each interface segment is sent, signed
    /// and rotated into the pattern frame, to the two sides it joins.
    pub fn scatter(&self, v: &[f64]) -> Result<InterfaceBlock, DecompositionError> {
        self.scatter_block(&DenseBlock::column_vector(v))
    }

    pub fn scatter_block(&self, v: &DenseBlock) -> Result<InterfaceBlock, DecompositionError> {
        self.check_rows(v.rows())?;
        let dpn = self.dofs_per_node();
        let offs: Vec<Vec<usize>> = self.patterns.iter().map(|p| p.side_offsets()).collect();
        let mut out = InterfaceBlock::zeros(self, v.cols());
        for c in 0..v.cols() {
            let col = v.col(c);
            for itf in &self.interfaces {
                let seg = &col[itf.offset..itf.offset + itf.len];
                for (sr, sign) in itf.signed_sides() {
                    let o = sr.occurrence;
                    let base = offs[self.occurrences[o].pattern][sr.side];
                    let (cs, sn) = self.rotations[o];
                    let dst = &mut out.column_mut(self, o, c)[base..base + itf.len];
                    rotate_add(dpn, cs, sn, sign, true, seg, dst);
                }
            }
        }
        Ok(out)
    }

    /// `Σ_s B t x⁽ˢ⁾`, summing each interface's first side then its second.
    pub fn gather(
        &self,
        w: &InterfaceBlock,
        combine: Combine,
    ) -> Result<Vec<f64>, DecompositionError> {
        Ok(self.gather_block(w, combine)?.into_vec())
    }

    pub fn gather_block(
        &self,
        w: &InterfaceBlock,
        combine: Combine,
    ) -> Result<DenseBlock, DecompositionError> {
        if w.blocks.len() != self.patterns.len() {
            return Err(DecompositionError::DimensionMismatch {
                expected: self.patterns.len(),
                found: w.blocks.len(),
            });
        }
        for (p, b) in w.blocks.iter().enumerate() {
            let want = (
                self.patterns[p].interface_len(),
                self.pattern_occurrences[p].len() * w.n_vectors,
            );
            if (b.rows(), b.cols()) != want {
                return Err(DecompositionError::DimensionMismatch {
                    expected: want.0 * want.1,
                    found: b.rows() * b.cols(),
                });
            }
        }
        let dpn = self.dofs_per_node();
        let offs: Vec<Vec<usize>> = self.patterns.iter().map(|p| p.side_offsets()).collect();
        let mut out = DenseBlock::zeros(self.n_lambda, w.n_vectors);
        for c in 0..w.n_vectors {
            let col = out.col_mut(c);
            for itf in &self.interfaces {
                let dst = &mut col[itf.offset..itf.offset + itf.len];
                for (sr, sign) in itf.signed_sides() {
                    let o = sr.occurrence;
                    let base = offs[self.occurrences[o].pattern][sr.side];
                    let (cs, sn) = self.rotations[o];
                    let src = &w.column(self, o, c)[base..base + itf.len];
                    rotate_add(dpn, cs, sn, sign, false, src, dst);
                }
                if combine == Combine::Average {
                    dst.iter_mut().for_each(|x| *x *= 0.5);
                }
            }
        }
        Ok(out)
    }
}
