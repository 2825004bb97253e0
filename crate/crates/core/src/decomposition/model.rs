use std::sync::OnceLock;

use super::DecompositionError;
use crate::exec::Execution;
use crate::fem::Pattern;
use crate::linalg::{
    factor_sym_with, DenseBlock, LinalgError, SymFactorization, DEFAULT_PIVOT_TOL,
};

/// A placed instance of a pattern: structure point = `R(rotation) p + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct Occurrence {
    pub pattern: usize,
    pub rotation: f64,
    pub translation: [f64; 2],
    /// Pattern sides glued to an interface, in pattern side order.
    pub active_sides: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideRef {
    pub occurrence: usize,
    pub side: usize,
}

/// Pairing of two occurrence sides. `first` enters the signed assembly with
/// `+orientation`, `second` with `-orientation`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    pub first: SideRef,
    pub second: SideRef,
    pub orientation: f64,
    /// Position of this interface's multipliers in an interface vector.
    pub offset: usize,
    pub len: usize,
}

impl Interface {
    /// The two sides with their assembly signs, in fixed summation order.
    pub fn signed_sides(&self) -> [(SideRef, f64); 2] {
        [
            (self.first, self.orientation),
            (self.second, -self.orientation),
        ]
    }
}

/// Occurrences sharing a pattern and the same set of active sides share the
/// interior/boundary split, hence the local preconditioner operators.
#[derive(Debug)]
pub struct LocalGroup {
    pub pattern: usize,
    pub active_sides: Vec<usize>,
    pub occurrences: Vec<usize>,
    /// Pattern free dofs on the active sides, in interface-block row order.
    pub boundary: Vec<usize>,
    /// Interface-block rows of `boundary`.
    pub boundary_rows: Vec<usize>,
    pub interior: Vec<usize>,
    kbb: OnceLock<DenseBlock>,
    dirichlet: OnceLock<Result<(DenseBlock, SymFactorization), LinalgError>>,
}

impl LocalGroup {
    pub fn kbb(&self, pattern: &Pattern) -> &DenseBlock {
        self.kbb.get_or_init(|| {
            pattern
                .stiffness()
                .submatrix(&self.boundary, &self.boundary)
        })
    }

    /// `(K_ib, factor(K_ii))`, built on first use.
    pub fn dirichlet_parts(
        &self,
        pattern: &Pattern,
        exec: Execution,
    ) -> Result<&(DenseBlock, SymFactorization), LinalgError> {
        self.dirichlet
            .get_or_init(|| {
                let k = pattern.stiffness();
                let kib = k.submatrix(&self.interior, &self.boundary);
                let kii = k.submatrix(&self.interior, &self.interior);
                let f = factor_sym_with(&kii, DEFAULT_PIVOT_TOL, exec)?;
                Ok((kib, f))
            })
            .as_ref()
            .map_err(Clone::clone)
    }
}

/// Patterns, their occurrences and the interface topology.
#[derive(Debug)]
pub struct StructureModel {
    pub(super) patterns: Vec<Pattern>,
    pub(super) occurrences: Vec<Occurrence>,
    pub(super) interfaces: Vec<Interface>,
    /// `[occurrence][side] -> (interface, sign)`
    pub(super) side_links: Vec<Vec<Option<(usize, f64)>>>,
    /// `[occurrence][interface-block row]` multiplicity weights.
    pub(super) scaling: Vec<Vec<f64>>,
    pub(super) rotations: Vec<(f64, f64)>,
    pub(super) pattern_occurrences: Vec<Vec<usize>>,
    /// Column of each occurrence inside its pattern block.
    pub(super) local_index: Vec<usize>,
    pub(super) groups: Vec<LocalGroup>,
    pub(super) occurrence_group: Vec<usize>,
    pub(super) n_lambda: usize,
    pub(super) exec: Execution,
}

impl StructureModel {
    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn pattern(&self, p: usize) -> &Pattern {
        &self.patterns[p]
    }

    pub fn occurrences(&self) -> &[Occurrence] {
        &self.occurrences
    }

    pub fn occurrence_pattern(&self, o: usize) -> &Pattern {
        &self.patterns[self.occurrences[o].pattern]
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn n_lambda(&self) -> usize {
        self.n_lambda
    }

    pub fn n_occurrences(&self) -> usize {
        self.occurrences.len()
    }

    pub fn n_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn dofs_per_node(&self) -> usize {
        self.patterns.first().map_or(1, Pattern::dofs_per_node)
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn set_execution(&mut self, exec: Execution) {
        self.exec = exec;
    }

    pub fn occurrences_of(&self, pattern: usize) -> &[usize] {
        &self.pattern_occurrences[pattern]
    }

    pub fn local_index(&self, o: usize) -> usize {
        self.local_index[o]
    }

    /// Interface and assembly sign attached to a side, if any.
    pub fn side_link(&self, o: usize, side: usize) -> Option<(usize, f64)> {
        self.side_links[o][side]
    }

    /// Occurrence on the other side of `o`'s side `side`.
    pub fn neighbor(&self, o: usize, side: usize) -> Option<SideRef> {
        let (k, _) = self.side_links[o][side]?;
        let itf = &self.interfaces[k];
        Some(if itf.first.occurrence == o && itf.first.side == side {
            itf.second
        } else {
            itf.first
        })
    }

    pub fn scaling(&self, o: usize) -> &[f64] {
        &self.scaling[o]
    }

    /// `(cos, sin)` of the placement rotation.
    pub fn rotation(&self, o: usize) -> (f64, f64) {
        self.rotations[o]
    }

    pub fn groups(&self) -> &[LocalGroup] {
        &self.groups
    }

    pub fn group_of(&self, o: usize) -> usize {
        self.occurrence_group[o]
    }

    /// Occurrences whose pattern stiffness has a kernel.
    pub fn floating_occurrences(&self) -> Vec<usize> {
        (0..self.occurrences.len())
            .filter(|&o| self.occurrence_pattern(o).kernel_dim() > 0)
            .collect()
    }

    /// `Σ_s D⁽ˢ⁾` evaluated on every multiplier.
    pub fn scaling_partition(&self) -> Vec<f64> {
        let offs: Vec<Vec<usize>> = self.patterns.iter().map(Pattern::side_offsets).collect();
        let mut sum = vec![0.0; self.n_lambda];
        for itf in &self.interfaces {
            for (sr, _) in itf.signed_sides() {
                let p = self.occurrences[sr.occurrence].pattern;
                let base = offs[p][sr.side];
                for i in 0..itf.len {
                    sum[itf.offset + i] += self.scaling[sr.occurrence][base + i];
                }
            }
        }
        sum
    }
}

/// Incremental construction of a [`StructureModel`].
#[derive(Debug, Default)]
pub struct ModelBuilder {
    patterns: Vec<Pattern>,
    occurrences: Vec<Occurrence>,
    links: Vec<(SideRef, SideRef, f64)>,
    exec: Execution,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn add_pattern(&mut self, p: Pattern) -> usize {
        self.patterns.push(p);
        self.patterns.len() - 1
    }

    pub fn pattern(&self, p: usize) -> &Pattern {
        &self.patterns[p]
    }

    pub fn add_occurrence(
        &mut self,
        pattern: usize,
        rotation: f64,
        translation: [f64; 2],
    ) -> usize {
        self.occurrences.push(Occurrence {
            pattern,
            rotation,
            translation,
            active_sides: Vec::new(),
        });
        self.occurrences.len() - 1
    }

    pub fn connect(
        &mut self,
        first: SideRef,
        second: SideRef,
    ) -> Result<usize, DecompositionError> {
        self.connect_oriented(first, second, 1.0)
    }

    /// Glues two sides; matching dofs are paired by position.
    pub fn connect_oriented(
        &mut self,
        first: SideRef,
        second: SideRef,
        orientation: f64,
    ) -> Result<usize, DecompositionError> {
        if orientation.abs() != 1.0 {
            return Err(DecompositionError::InvalidTopology(format!(
                "orientation must be +1 or -1, got {orientation}"
            )));
        }
        let len = |s: SideRef| -> Result<usize, DecompositionError> {
            let occ = self
                .occurrences
                .get(s.occurrence)
                .ok_or(DecompositionError::UnknownSide(s))?;
            let p = &self.patterns[occ.pattern];
            p.sides()
                .get(s.side)
                .map(|x| x.dofs.len())
                .ok_or(DecompositionError::UnknownSide(s))
        };
        let (l1, l2) = (len(first)?, len(second)?);
        if l1 != l2 {
            return Err(DecompositionError::InterfaceMismatch {
                expected: l1,
                found: l2,
            });
        }
        if first.occurrence == second.occurrence {
            return Err(DecompositionError::InvalidTopology(
                "an occurrence cannot be glued to itself".into(),
            ));
        }
        for (a, b, _) in &self.links {
            for s in [first, second] {
                if *a == s || *b == s {
                    return Err(DecompositionError::SideAlreadyConnected(s));
                }
            }
        }
        self.links.push((first, second, orientation));
        Ok(self.links.len() - 1)
    }

    pub fn build(self) -> Result<StructureModel, DecompositionError> {
        let ModelBuilder {
            patterns,
            mut occurrences,
            links,
            exec,
        } = self;
        if patterns.is_empty() || occurrences.is_empty() {
            return Err(DecompositionError::InvalidTopology("empty model".into()));
        }
        let dpn = patterns[0].dofs_per_node();
        if patterns.iter().any(|p| p.dofs_per_node() != dpn) {
            return Err(DecompositionError::InvalidTopology(
                "patterns mix scalar and vector physics".into(),
            ));
        }
        for o in &occurrences {
            if o.pattern >= patterns.len() {
                return Err(DecompositionError::InvalidTopology(format!(
                    "occurrence refers to missing pattern {}",
                    o.pattern
                )));
            }
        }

        let mut side_links: Vec<Vec<Option<(usize, f64)>>> = occurrences
            .iter()
            .map(|o| vec![None; patterns[o.pattern].sides().len()])
            .collect();
        let mut interfaces = Vec::with_capacity(links.len());
        let mut offset = 0;
        for (k, &(first, second, orientation)) in links.iter().enumerate() {
            let len = patterns[occurrences[first.occurrence].pattern].sides()[first.side]
                .dofs
                .len();
            side_links[first.occurrence][first.side] = Some((k, orientation));
            side_links[second.occurrence][second.side] = Some((k, -orientation));
            interfaces.push(Interface {
                first,
                second,
                orientation,
                offset,
                len,
            });
            offset += len;
        }
        for (o, occ) in occurrences.iter_mut().enumerate() {
            occ.active_sides = (0..side_links[o].len())
                .filter(|&s| side_links[o][s].is_some())
                .collect();
        }

        // multiplicity of every (occurrence, free dof), via union-find
        let mut base = Vec::with_capacity(occurrences.len());
        let mut total = 0;
        for occ in &occurrences {
            base.push(total);
            total += patterns[occ.pattern].n_dofs();
        }
        let mut uf = UnionFind::new(total);
        for itf in &interfaces {
            let pa = &patterns[occurrences[itf.first.occurrence].pattern];
            let pb = &patterns[occurrences[itf.second.occurrence].pattern];
            let da = &pa.sides()[itf.first.side].dofs;
            let db = &pb.sides()[itf.second.side].dofs;
            for (x, y) in da.iter().zip(db) {
                uf.union(
                    base[itf.first.occurrence] + x,
                    base[itf.second.occurrence] + y,
                );
            }
        }
        let scaling: Vec<Vec<f64>> = occurrences
            .iter()
            .enumerate()
            .map(|(o, occ)| {
                let p = &patterns[occ.pattern];
                let mut w = vec![0.0; p.interface_len()];
                let offs = p.side_offsets();
                for &s in &occ.active_sides {
                    for (i, &d) in p.sides()[s].dofs.iter().enumerate() {
                        let m = uf.size(base[o] + d);
                        w[offs[s] + i] = 1.0 / m as f64;
                    }
                }
                w
            })
            .collect();

        let rotations = occurrences
            .iter()
            .map(|o| (o.rotation.cos(), o.rotation.sin()))
            .collect();
        let mut pattern_occurrences = vec![Vec::new(); patterns.len()];
        let mut local_index = vec![0; occurrences.len()];
        for (o, occ) in occurrences.iter().enumerate() {
            local_index[o] = pattern_occurrences[occ.pattern].len();
            pattern_occurrences[occ.pattern].push(o);
        }

        let mut groups: Vec<LocalGroup> = Vec::new();
        let mut occurrence_group = vec![0; occurrences.len()];
        for (o, occ) in occurrences.iter().enumerate() {
            if let Some(g) = groups
                .iter()
                .position(|g| g.pattern == occ.pattern && g.active_sides == occ.active_sides)
            {
                groups[g].occurrences.push(o);
                occurrence_group[o] = g;
                continue;
            }
            let p = &patterns[occ.pattern];
            let offs = p.side_offsets();
            let mut boundary = Vec::new();
            let mut boundary_rows = Vec::new();
            for &s in &occ.active_sides {
                for (i, &d) in p.sides()[s].dofs.iter().enumerate() {
                    boundary.push(d);
                    boundary_rows.push(offs[s] + i);
                }
            }
            let mut is_b = vec![false; p.n_dofs()];
            boundary.iter().for_each(|&d| is_b[d] = true);
            let interior = (0..p.n_dofs()).filter(|&d| !is_b[d]).collect();
            occurrence_group[o] = groups.len();
            groups.push(LocalGroup {
                pattern: occ.pattern,
                active_sides: occ.active_sides.clone(),
                occurrences: vec![o],
                boundary,
                boundary_rows,
                interior,
                kbb: OnceLock::new(),
                dirichlet: OnceLock::new(),
            });
        }

        Ok(StructureModel {
            patterns,
            occurrences,
            interfaces,
            side_links,
            scaling,
            rotations,
            pattern_occurrences,
            local_index,
            groups,
            occurrence_group,
            n_lambda: offset,
            exec,
        })
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }

    pub(crate) fn size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}
