use super::element::{plane_strain_stiffness, thermal_stiffness};
use super::mesh::PatternMesh;
use super::FemError;
use crate::exec::Execution;
use crate::linalg::{factor_sym_with, DenseBlock, SymFactorization, DEFAULT_PIVOT_TOL};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Physics {
    /// Scalar heat conduction, unit conductivity.
    Thermal,
    PlaneStrain {
        young: f64,
        poisson: f64,
    },
}

impl Physics {
    pub fn elastic_default() -> Self {
        Physics::PlaneStrain {
            young: 1.0,
            poisson: 0.3,
        }
    }

    pub fn dofs_per_node(self) -> usize {
        match self {
            Physics::Thermal => 1,
            Physics::PlaneStrain { .. } => 2,
        }
    }

    pub fn is_elastic(self) -> bool {
        matches!(self, Physics::PlaneStrain { .. })
    }
}

/// A named group of pattern nodes that may be glued to another occurrence.
/// `dofs` lists free-dof indices node by node (components contiguous).
#[derive(Clone, Debug, PartialEq)]
pub struct Side {
    pub name: String,
    pub nodes: Vec<usize>,
    pub dofs: Vec<usize>,
}

/// One meshed (or synthetic) pattern: stiffness with Dirichlet dofs removed,
/// its pseudo-inverse factorization and the sides it can be connected by.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub name: String,
    pub physics: Physics,
    pub mesh: Option<PatternMesh>,
    /// Nodes whose every component is fixed to zero.
    pub fixed_nodes: Vec<usize>,
    /// free index -> (node, component)
    free_dofs: Vec<(usize, usize)>,
    /// node * dofs_per_node + component -> free index
    dof_index: Vec<Option<usize>>,
    stiffness: DenseBlock,
    factor: SymFactorization,
    sides: Vec<Side>,
}

impl Pattern {
    /// Assembles the stiffness of `mesh`, eliminates the fixed nodes and
    /// factorizes.
    pub fn assemble(
        name: &str,
        mesh: PatternMesh,
        physics: Physics,
        fixed_nodes: &[usize],
        exec: Execution,
    ) -> Result<Pattern, FemError> {
        let dpn = physics.dofs_per_node();
        let n_nodes = mesh.nodes.len();
        let mut fixed = vec![false; n_nodes];
        for &n in fixed_nodes {
            if n >= n_nodes {
                return Err(FemError::NodeNotFound(n));
            }
            fixed[n] = true;
        }
        let mut dof_index = vec![None; n_nodes * dpn];
        let mut free_dofs = Vec::new();
        for node in 0..n_nodes {
            if !fixed[node] {
                for c in 0..dpn {
                    dof_index[node * dpn + c] = Some(free_dofs.len());
                    free_dofs.push((node, c));
                }
            }
        }
        let nf = free_dofs.len();
        let mut k = DenseBlock::zeros(nf, nf);
        for e in 0..mesh.elements.len() {
            let tri = mesh.elements[e];
            let pts = mesh.element_points(e);
            let local: Vec<Option<usize>> = tri
                .iter()
                .flat_map(|&n| (0..dpn).map(move |c| n * dpn + c))
                .map(|d| dof_index[d])
                .collect();
            match physics {
                Physics::Thermal => {
                    let ke = thermal_stiffness(&pts);
                    scatter_element(&mut k, &local, |i, j| ke[i][j]);
                }
                Physics::PlaneStrain { young, poisson } => {
                    let ke = plane_strain_stiffness(&pts, young, poisson);
                    scatter_element(&mut k, &local, |i, j| ke[i][j]);
                }
            }
        }
        symmetrize(&mut k);
        let factor = factor_sym_with(&k, DEFAULT_PIVOT_TOL, exec)?;
        let mut fixed_nodes: Vec<usize> = fixed_nodes.to_vec();
        fixed_nodes.sort_unstable();
        fixed_nodes.dedup();
        Ok(Pattern {
            name: name.to_string(),
            physics,
            mesh: Some(mesh),
            fixed_nodes,
            free_dofs,
            dof_index,
            stiffness: k,
            factor,
            sides: Vec::new(),
        })
    }

    /// Pattern defined directly by a symmetric matrix, one scalar dof per
    /// pseudo-node and no mesh.
    pub fn from_matrix(name: &str, k: DenseBlock, exec: Execution) -> Result<Pattern, FemError> {
        let n = k.rows();
        let factor = factor_sym_with(&k, DEFAULT_PIVOT_TOL, exec)?;
        Ok(Pattern {
            name: name.to_string(),
            physics: Physics::Thermal,
            mesh: None,
            fixed_nodes: Vec::new(),
            free_dofs: (0..n).map(|i| (i, 0)).collect(),
            dof_index: (0..n).map(Some).collect(),
            stiffness: k,
            factor,
            sides: Vec::new(),
        })
    }

    /// Registers a side from an ordered node list. Every node must be free.
    pub fn add_side(&mut self, name: &str, nodes: &[usize]) -> Result<usize, FemError> {
        let dpn = self.dofs_per_node();
        let mut dofs = Vec::with_capacity(nodes.len() * dpn);
        for &n in nodes {
            if n * dpn >= self.dof_index.len() {
                return Err(FemError::NodeNotFound(n));
            }
            for c in 0..dpn {
                match self.dof_index[n * dpn + c] {
                    Some(d) => dofs.push(d),
                    None => {
                        return Err(FemError::InvalidGeometry(format!(
                            "side '{name}' contains fixed node {n}"
                        )))
                    }
                }
            }
        }
        for other in &self.sides {
            if other.name == name {
                return Err(FemError::InvalidGeometry(format!(
                    "duplicate side '{name}'"
                )));
            }
            if other.nodes.iter().any(|n| nodes.contains(n)) {
                return Err(FemError::InvalidGeometry(format!(
                    "side '{name}' overlaps side '{}'",
                    other.name
                )));
            }
        }
        self.sides.push(Side {
            name: name.to_string(),
            nodes: nodes.to_vec(),
            dofs,
        });
        Ok(self.sides.len() - 1)
    }

    /// Fixes both displacement components of `node` (a hinge).
    pub fn apply_hinge(&self, node: usize) -> Result<Pattern, FemError> {
        if !self.physics.is_elastic() {
            return Err(FemError::NotElastic);
        }
        let mesh = self.mesh.clone().ok_or(FemError::NodeNotFound(node))?;
        if node >= mesh.nodes.len() {
            return Err(FemError::NodeNotFound(node));
        }
        let mut fixed = self.fixed_nodes.clone();
        fixed.push(node);
        let mut hinged = Pattern::assemble(
            &format!("{}+hinge", self.name),
            mesh,
            self.physics,
            &fixed,
            Execution::default(),
        )?;
        for side in &self.sides {
            hinged.add_side(&side.name, &side.nodes)?;
        }
        Ok(hinged)
    }

    pub fn dofs_per_node(&self) -> usize {
        self.physics.dofs_per_node()
    }

    pub fn n_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn stiffness(&self) -> &DenseBlock {
        &self.stiffness
    }

    pub fn factor(&self) -> &SymFactorization {
        &self.factor
    }

    pub fn kernel_dim(&self) -> usize {
        self.factor.kernel_dim()
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side(&self, name: &str) -> Option<usize> {
        self.sides.iter().position(|s| s.name == name)
    }

    /// `(node, component)` of a free dof.
    pub fn free_dof(&self, d: usize) -> (usize, usize) {
        self.free_dofs[d]
    }

    pub fn free_index(&self, node: usize, component: usize) -> Option<usize> {
        self.dof_index
            .get(node * self.dofs_per_node() + component)
            .copied()
            .flatten()
    }

    /// Total number of side dofs (rows of this pattern's interface block).
    pub fn interface_len(&self) -> usize {
        self.sides.iter().map(|s| s.dofs.len()).sum()
    }

    /// Row offset of each side within the interface block.
    pub fn side_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.sides.len());
        let mut acc = 0;
        for s in &self.sides {
            off.push(acc);
            acc += s.dofs.len();
        }
        off
    }
}

fn scatter_element(k: &mut DenseBlock, local: &[Option<usize>], ke: impl Fn(usize, usize) -> f64) {
    for (a, ga) in local.iter().enumerate() {
        let Some(i) = *ga else { continue };
        for (b, gb) in local.iter().enumerate() {
            let Some(j) = *gb else { continue };
            k.add_at(i, j, ke(a, b));
        }
    }
}

fn symmetrize(k: &mut DenseBlock) {
    let n = k.rows();
    for j in 0..n {
        for i in j + 1..n {
            let v = 0.5 * (k.get(i, j) + k.get(j, i));
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
}
