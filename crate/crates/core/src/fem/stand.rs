use super::mesh::{NodeTags, PatternMesh};
use super::pattern::{Pattern, Physics};
use super::FemError;
use crate::exec::Execution;

/// Rectangular stand `[-width/2, width/2] x [0, height]` in its own frame.
/// The top edge (`y = height`) is the side `top`, nodes left to right.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StandGeometry {
    pub width: f64,
    pub height: f64,
    pub width_divs: usize,
    pub height_divs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandBase {
    Fixed,
    Free,
}

impl StandGeometry {
    pub fn node(&self, i: usize, k: usize) -> usize {
        k * (self.width_divs + 1) + i
    }

    pub fn mesh(&self) -> Result<PatternMesh, FemError> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(FemError::InvalidGeometry(format!(
                "stand needs positive width and height, got {} x {}",
                self.width, self.height
            )));
        }
        if self.width_divs == 0 || self.height_divs == 0 {
            return Err(FemError::InvalidGeometry(
                "stand divisions must be >= 1".into(),
            ));
        }
        let (nw, nh) = (self.width_divs, self.height_divs);
        let mut nodes = Vec::new();
        let mut tags = Vec::new();
        for k in 0..=nh {
            for i in 0..=nw {
                nodes.push([
                    -0.5 * self.width + self.width * i as f64 / nw as f64,
                    self.height * k as f64 / nh as f64,
                ]);
                let mut t = NodeTags::empty();
                t.set(NodeTags::STAND_BASE, k == 0);
                t.set(NodeTags::STAND_TOP, k == nh);
                tags.push(t);
            }
        }
        let mut elements = Vec::new();
        for k in 0..nh {
            for i in 0..nw {
                let n00 = self.node(i, k);
                let n10 = self.node(i + 1, k);
                let n11 = self.node(i + 1, k + 1);
                let n01 = self.node(i, k + 1);
                elements.push([n00, n10, n11]);
                elements.push([n00, n11, n01]);
            }
        }
        PatternMesh::new(nodes, elements, tags)
    }
}

/// Builds a stand whose top edge glues onto `attach_nodes` nodes of another
/// pattern.
pub fn build_stand_pattern(
    geom: &StandGeometry,
    physics: Physics,
    base: StandBase,
    attach_nodes: usize,
) -> Result<Pattern, FemError> {
    if geom.width_divs + 1 != attach_nodes {
        return Err(FemError::InterfaceMismatch {
            expected: attach_nodes,
            found: geom.width_divs + 1,
        });
    }
    let mesh = geom.mesh()?;
    let fixed = match base {
        StandBase::Fixed => mesh.nodes_with(NodeTags::STAND_BASE),
        StandBase::Free => Vec::new(),
    };
    let top = mesh.nodes_with(NodeTags::STAND_TOP);
    let mut p = Pattern::assemble("stand", mesh, physics, &fixed, Execution::default())?;
    p.add_side("top", &top)?;
    Ok(p)
}
