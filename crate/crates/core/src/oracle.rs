//! Reference direct solve of the assembled global problem.
//!
//! Occurrence stiffnesses are rotated into the structure frame, glued dofs
//! are merged, the matrix is reordered by reverse Cuthill-McKee and factored
//! with an envelope (skyline) Cholesky.

use std::collections::VecDeque;

use crate::decomposition::{StructureModel, UnionFind};
use crate::fem::LoadCase;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("global matrix is singular at step {step} (pivot {pivot:.3e}); the structure lacks Dirichlet data")]
    SingularGlobalMatrix { step: usize, pivot: f64 },
    #[error("load case does not match the model: {0}")]
    LoadMismatch(String),
}

/// Relative pivot threshold of the global factorization.
const PIVOT_TOL: f64 = 1e-12;

/// Global numbering of every occurrence dof.
#[derive(Clone, Debug)]
pub struct GlobalNumbering {
    pub n: usize,
    /// `[occurrence][free dof] -> global dof` (after reordering).
    pub map: Vec<Vec<usize>>,
}

/// Assembled structure-frame system in envelope storage.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub numbering: GlobalNumbering,
    /// First column of the envelope of each row.
    first: Vec<usize>,
    /// Start of each row in `values`; row `i` holds columns `first[i]..=i`.
    start: Vec<usize>,
    values: Vec<f64>,
}

/// Direct solution, in the structure frame and split back per occurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub global: Vec<f64>,
    /// Per occurrence, in the pattern frame (comparable to FETI output).
    pub per_occurrence: Vec<Vec<f64>>,
}

fn rotation_of(model: &StructureModel, o: usize) -> (f64, f64) {
    if model.dofs_per_node() == 1 {
        (1.0, 0.0)
    } else {
        model.rotation(o)
    }
}

/// `out = T x` (`inverse`: `Tᵀ x`) with `T` the per-node placement rotation.
fn rotate_dofs(dpn: usize, (c, s): (f64, f64), inverse: bool, x: &[f64]) -> Vec<f64> {
    if dpn == 1 {
        return x.to_vec();
    }
    let s = if inverse { -s } else { s };
    x.chunks_exact(2)
        .flat_map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1]])
        .collect()
}

fn numbering(model: &StructureModel) -> (Vec<Vec<usize>>, usize) {
    let mut base = Vec::with_capacity(model.n_occurrences());
    let mut total = 0;
    for o in 0..model.n_occurrences() {
        base.push(total);
        total += model.occurrence_pattern(o).n_dofs();
    }
    let mut uf = UnionFind::new(total);
    for itf in model.interfaces() {
        let da = &model.occurrence_pattern(itf.first.occurrence).sides()[itf.first.side].dofs;
        let db = &model.occurrence_pattern(itf.second.occurrence).sides()[itf.second.side].dofs;
        for (x, y) in da.iter().zip(db) {
            uf.union(
                base[itf.first.occurrence] + x,
                base[itf.second.occurrence] + y,
            );
        }
    }
    let mut id = vec![usize::MAX; total];
    let mut n = 0;
    let map = (0..model.n_occurrences())
        .map(|o| {
            (0..model.occurrence_pattern(o).n_dofs())
                .map(|d| {
                    let r = uf.find(base[o] + d);
                    if id[r] == usize::MAX {
                        id[r] = n;
                        n += 1;
                    }
                    id[r]
                })
                .collect()
        })
        .collect();
    (map, n)
}

/// Reverse Cuthill-McKee permutation: `perm[old] = new`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let bfs = |start: usize, seen: &mut Vec<bool>, order: &mut Vec<usize>| -> usize {
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(v) = q.pop_front() {
            order.push(v);
            last = v;
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&u| !seen[u]).collect();
            nb.sort_by_key(|&u| (adj[u].len(), u));
            for u in nb {
                seen[u] = true;
                q.push_back(u);
            }
        }
        last
    };
    for s in 0..n {
        if seen[s] {
            continue;
        }
        // pseudo-peripheral start: the last vertex reached from s
        let mut scratch = seen.clone();
        let mut tmp = Vec::new();
        let far = bfs(s, &mut scratch, &mut tmp);
        bfs(far, &mut seen, &mut order);
    }
    let mut perm = vec![0; n];
    for (k, &v) in order.iter().rev().enumerate() {
        perm[v] = k;
    }
    perm
}

pub fn assemble_global(model: &StructureModel) -> GlobalSystem {
    let dpn = model.dofs_per_node();
    let (map0, n) = numbering(model);
    // sparsity of nonzero node blocks: rotation mixes the components of a node
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for o in 0..model.n_occurrences() {
        let k = model.occurrence_pattern(o).stiffness();
        let m = &map0[o];
        for j in 0..k.cols() {
            let col = k.col(j);
            for i in 0..k.rows() {
                if col[i] == 0.0 {
                    continue;
                }
                let (bi, bj) = (i - i % dpn, j - j % dpn);
                for p in bi..bi + dpn {
                    for q in bj..bj + dpn {
                        if p != q {
                            adj[m[p]].push(m[q]);
                        }
                    }
                }
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let perm = reverse_cuthill_mckee(&adj);
    let map: Vec<Vec<usize>> = map0
        .iter()
        .map(|m| m.iter().map(|&g| perm[g]).collect())
        .collect();
    let mut first: Vec<usize> = (0..n).collect();
    for (old, nb) in adj.iter().enumerate() {
        let i = perm[old];
        for &u in nb {
            first[i] = first[i].min(perm[u]);
        }
    }
    let mut start = Vec::with_capacity(n + 1);
    let mut acc = 0;
    for i in 0..n {
        start.push(acc);
        acc += i - first[i] + 1;
    }
    start.push(acc);
    let mut values = vec![0.0; acc];
    for o in 0..model.n_occurrences() {
        let k = model.occurrence_pattern(o).stiffness();
        let m = &map[o];
        let (c, s) = rotation_of(model, o);
        let nd = k.rows();
        let mut add = |gi: usize, gj: usize, v: f64| {
            if gj <= gi && v != 0.0 {
                assert!(gj >= first[gi], "entry ({gi}, {gj}) outside the envelope");
                values[start[gi] + gj - first[gi]] += v;
            }
        };
        if dpn == 1 {
            for j in 0..nd {
                for i in 0..nd {
                    add(m[i], m[j], k.get(i, j));
                }
            }
            continue;
        }
        // R K Rᵀ per 2x2 node block
        for bj in (0..nd).step_by(2) {
            for bi in (0..nd).step_by(2) {
                let a = [
                    [k.get(bi, bj), k.get(bi, bj + 1)],
                    [k.get(bi + 1, bj), k.get(bi + 1, bj + 1)],
                ];
                if a.iter().flatten().all(|&x| x == 0.0) {
                    continue;
                }
                let r = [[c, -s], [s, c]];
                let mut ra = [[0.0; 2]; 2];
                for p in 0..2 {
                    for q in 0..2 {
                        ra[p][q] = r[p][0] * a[0][q] + r[p][1] * a[1][q];
                    }
                }
                for p in 0..2 {
                    for q in 0..2 {
                        let v = ra[p][0] * r[q][0] + ra[p][1] * r[q][1];
                        add(m[bi + p], m[bj + q], v);
                    }
                }
            }
        }
    }
    GlobalSystem {
        numbering: GlobalNumbering { n, map },
        first,
        start,
        values,
    }
}

impl GlobalSystem {
    pub fn n(&self) -> usize {
        self.numbering.n
    }

    /// Number of stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.start[i] + j - self.first[i]]
    }

    /// In-place envelope Cholesky `A = L Lᵀ`.
    pub fn factor(mut self) -> Result<GlobalFactor, OracleError> {
        let n = self.n();
        let max_diag = (0..n).map(|i| self.at(i, i).abs()).fold(0.0, f64::max);
        for i in 0..n {
            let fi = self.first[i];
            for j in fi..=i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let (ri, rj) = (self.start[i], self.start[j]);
                let mut sum = self.values[ri + j - fi];
                for k in k0..j {
                    sum -= self.values[ri + k - fi] * self.values[rj + k - fj];
                }
                if j < i {
                    sum /= self.values[rj + j - fj];
                } else {
                    if !(sum > PIVOT_TOL * max_diag) {
                        return Err(OracleError::SingularGlobalMatrix {
                            step: i,
                            pivot: sum,
                        });
                    }
                    sum = sum.sqrt();
                }
                self.values[ri + j - fi] = sum;
            }
        }
        Ok(GlobalFactor { l: self })
    }
}

#[derive(Clone, Debug)]
pub struct GlobalFactor {
    l: GlobalSystem,
}

impl GlobalFactor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.n();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = l.first[i];
            let row = &l.values[l.start[i]..l.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = l.first[i];
            let row = &l.values[l.start[i]..l.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        y
    }
}

/// Structure-frame load vector of the global problem.
pub fn assemble_load(
    model: &StructureModel,
    numbering: &GlobalNumbering,
    loads: &LoadCase,
) -> Result<Vec<f64>, OracleError> {
    if loads.forces.len() != model.n_occurrences() {
        return Err(OracleError::LoadMismatch(format!(
            "{} load vectors for {} occurrences",
            loads.forces.len(),
            model.n_occurrences()
        )));
    }
    let dpn = model.dofs_per_node();
    let mut f = vec![0.0; numbering.n];
    for (o, fo) in loads.forces.iter().enumerate() {
        if fo.len() != numbering.map[o].len() {
            return Err(OracleError::LoadMismatch(format!(
                "occurrence {o} has {} forces",
                fo.len()
            )));
        }
        let rotated = rotate_dofs(dpn, rotation_of(model, o), false, fo);
        for (&g, v) in numbering.map[o].iter().zip(rotated) {
            f[g] += v;
        }
    }
    Ok(f)
}

/// Solves `K u = f` for the whole structure.
pub fn oracle_direct_solve(
    model: &StructureModel,
    loads: &LoadCase,
) -> Result<OracleSolution, OracleError> {
    let sys = assemble_global(model);
    let numbering = sys.numbering.clone();
    let f = assemble_load(model, &numbering, loads)?;
    let global = sys.factor()?.solve(&f);
    let dpn = model.dofs_per_node();
    let per_occurrence = (0..model.n_occurrences())
        .map(|o| {
            let ug: Vec<f64> = numbering.map[o].iter().map(|&g| global[g]).collect();
            rotate_dofs(dpn, rotation_of(model, o), true, &ug)
        })
        .collect();
    Ok(OracleSolution {
        global,
        per_occurrence,
    })
}

/// `‖a - b‖ / ‖b‖` over all occurrences.
pub fn relative_error(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            num += (p - q) * (p - q);
            den += q * q;
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Euclidean norm of all occurrence displacements.
pub fn displacement_norm(u: &[Vec<f64>]) -> f64 {
    u.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}
