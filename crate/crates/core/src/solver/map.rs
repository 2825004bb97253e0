use super::SolveError;
use crate::decomposition::{rotate_add, StructureModel};
use crate::linalg::DenseBlock;

/// One multivector column: destination interface `k` receives the data of
/// interface `sources[k]`, transported by a rotation of `angles[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub sources: Vec<usize>,
    pub angles: Vec<f64>,
}

impl Recipe {
    pub fn is_identity(&self) -> bool {
        self.sources.iter().enumerate().all(|(k, &s)| k == s)
            && self.angles.iter().all(|&a| a == 0.0)
    }
}

/// Interface permutations turning one direction into a block of directions.
#[derive(Clone, Debug, PartialEq)]
pub struct MultivectorMap {
    recipes: Vec<Recipe>,
    offsets: Vec<usize>,
    lens: Vec<usize>,
    n_lambda: usize,
    dpn: usize,
}

impl MultivectorMap {
    /// Only the identity recipe: the multivector engine reduces to classical.
    pub fn identity(model: &StructureModel) -> Self {
        let n = model.interfaces().len();
        Self::from_permutations(model, &[(0..n).collect()]).expect("identity is consistent")
    }

    /// Builds recipes from `perms[r][dest] = source`. Frame transport angles
    /// follow from the placement of the first occurrence of each interface.
    /// `perms[0]` must be the identity.
    pub fn from_permutations(
        model: &StructureModel,
        perms: &[Vec<usize>],
    ) -> Result<Self, SolveError> {
        let itfs = model.interfaces();
        let n = itfs.len();
        let Some(first) = perms.first() else {
            return Err(SolveError::TopologyMismatch("no recipe given".into()));
        };
        if first.iter().enumerate().any(|(k, &s)| k != s) || first.len() != n {
            return Err(SolveError::TopologyMismatch(
                "recipe 0 must be the identity".into(),
            ));
        }
        let theta = |k: usize| model.occurrences()[itfs[k].first.occurrence].rotation;
        let mut recipes = Vec::with_capacity(perms.len());
        for (r, perm) in perms.iter().enumerate() {
            if perm.len() != n {
                return Err(SolveError::TopologyMismatch(format!(
                    "recipe {r} covers {} interfaces, model has {n}",
                    perm.len()
                )));
            }
            let mut angles = Vec::with_capacity(n);
            for (k, &s) in perm.iter().enumerate() {
                if s >= n || itfs[s].len != itfs[k].len {
                    return Err(SolveError::TopologyMismatch(format!(
                        "recipe {r}: interface {s} cannot feed interface {k}"
                    )));
                }
                angles.push(if s == k { 0.0 } else { theta(k) - theta(s) });
            }
            recipes.push(Recipe {
                sources: perm.clone(),
                angles,
            });
        }
        Ok(MultivectorMap {
            recipes,
            offsets: itfs.iter().map(|i| i.offset).collect(),
            lens: itfs.iter().map(|i| i.len).collect(),
            n_lambda: model.n_lambda(),
            dpn: model.dofs_per_node(),
        })
    }

    /// Cyclic group over the interfaces listed in `ring` (in ring order);
    /// every other interface is kept in place by all recipes.
    pub fn cyclic(model: &StructureModel, ring: &[usize]) -> Result<Self, SolveError> {
        Self::from_permutations(model, &cyclic_perms(model.interfaces().len(), ring, &[]))
    }

    /// Cyclic group over `ring` combined with every rotation of `swap`
    /// (`ring.len() * swap.len()` recipes). With two entries in `swap` this is
    /// the permutation-and-exchange block used for two identical stands.
    pub fn cyclic_with_swap(
        model: &StructureModel,
        ring: &[usize],
        swap: &[usize],
    ) -> Result<Self, SolveError> {
        Self::from_permutations(model, &cyclic_perms(model.interfaces().len(), ring, swap))
    }

    pub fn len(&self) -> usize {
        self.recipes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recipes.is_empty()
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    /// Applies recipe `r` to an interface vector.
    pub fn apply_recipe(&self, r: usize, w: &[f64]) -> Vec<f64> {
        let rec = &self.recipes[r];
        if rec.is_identity() {
            return w.to_vec();
        }
        let mut out = vec![0.0; w.len()];
        for (k, (&s, &a)) in rec.sources.iter().zip(&rec.angles).enumerate() {
            let src = &w[self.offsets[s]..self.offsets[s] + self.lens[s]];
            let dst = &mut out[self.offsets[k]..self.offsets[k] + self.lens[k]];
            if a == 0.0 {
                dst.copy_from_slice(src);
            } else {
                rotate_add(self.dpn, a.cos(), a.sin(), 1.0, false, src, dst);
            }
        }
        out
    }

    /// The multivector of `w`: column `r` is recipe `r` applied to `w`.
    pub fn expand(&self, w: &[f64]) -> Result<DenseBlock, SolveError> {
        if w.len() != self.n_lambda {
            return Err(SolveError::TopologyMismatch(format!(
                "vector of length {} for a map over {} multipliers",
                w.len(),
                self.n_lambda
            )));
        }
        let mut out = DenseBlock::zeros(self.n_lambda, self.recipes.len());
        for r in 0..self.recipes.len() {
            out.col_mut(r).copy_from_slice(&self.apply_recipe(r, w));
        }
        Ok(out)
    }

    /// Applies every recipe to every column of `w`: column `c * len + r`.
    pub fn expand_block(&self, w: &DenseBlock) -> Result<DenseBlock, SolveError> {
        let mut out = DenseBlock::zeros(self.n_lambda, w.cols() * self.recipes.len());
        for c in 0..w.cols() {
            let e = self.expand(w.col(c))?;
            for r in 0..self.recipes.len() {
                out.col_mut(c * self.recipes.len() + r)
                    .copy_from_slice(e.col(r));
            }
        }
        Ok(out)
    }
}

fn cyclic_perms(n: usize, ring: &[usize], swap: &[usize]) -> Vec<Vec<usize>> {
    let m = ring.len().max(1);
    let sw = swap.len().max(1);
    let mut perms = Vec::with_capacity(m * sw);
    for t in 0..sw {
        for shift in 0..m {
            let mut p: Vec<usize> = (0..n).collect();
            for (i, &k) in ring.iter().enumerate() {
                p[k] = ring[(i + shift) % ring.len()];
            }
            for (i, &k) in swap.iter().enumerate() {
                p[k] = swap[(i + t) % swap.len()];
            }
            perms.push(p);
        }
    }
    perms
}
