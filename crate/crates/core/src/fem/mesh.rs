use std::fmt::Write as _;

use bitflags::bitflags;

use super::element::signed_area;
use super::FemError;

bitflags! {
    /// Boundary labels carried by mesh nodes; a corner node may carry several.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
    pub struct NodeTags: u8 {
        const INNER_ARC = 1;
        const OUTER_ARC = 1 << 1;
        const INTERFACE_A = 1 << 2;
        const INTERFACE_B = 1 << 3;
        const STAND_BASE = 1 << 4;
        const STAND_TOP = 1 << 5;
    }
}

/// Linear-triangle mesh of one pattern, in the pattern frame.
#[derive(Clone, Debug)]
pub struct PatternMesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 3]>,
    pub tags: Vec<NodeTags>,
}

impl PatternMesh {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        tags: Vec<NodeTags>,
    ) -> Result<Self, FemError> {
        if tags.len() != nodes.len() {
            return Err(FemError::InvalidGeometry(format!(
                "{} tags for {} nodes",
                tags.len(),
                nodes.len()
            )));
        }
        let mesh = PatternMesh {
            nodes,
            elements,
            tags,
        };
        for (e, tri) in mesh.elements.iter().enumerate() {
            if tri.iter().any(|&n| n >= mesh.nodes.len()) {
                return Err(FemError::InvalidGeometry(format!(
                    "element {e} references a missing node"
                )));
            }
            if mesh.element_area(e) <= 0.0 {
                return Err(FemError::DegenerateElement(e));
            }
        }
        Ok(mesh)
    }

    pub fn element_points(&self, e: usize) -> [[f64; 2]; 3] {
        let t = self.elements[e];
        [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]]
    }

    pub fn element_area(&self, e: usize) -> f64 {
        signed_area(&self.element_points(e))
    }

    pub fn nodes_with(&self, tag: NodeTags) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&n| self.tags[n].contains(tag))
            .collect()
    }

    /// Plain-text dump: node table then element table.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.12e} {:.12e} {}", p[0], p[1], self.tags[i].bits());
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for (i, t) in self.elements.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_element() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let tags = vec![NodeTags::empty(); 3];
        assert!(PatternMesh::new(nodes.clone(), vec![[0, 1, 2]], tags.clone()).is_ok());
        assert!(matches!(
            PatternMesh::new(nodes, vec![[0, 2, 1]], tags),
            Err(FemError::DegenerateElement(0))
        ));
    }

    #[test]
    fn dump_lists_everything() {
        let mesh = PatternMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![NodeTags::INNER_ARC, NodeTags::empty(), NodeTags::empty()],
        )
        .unwrap();
        let d = mesh.dump();
        assert!(d.starts_with("nodes 3\n"));
        assert!(d.contains("elements 1\n0 0 1 2\n"));
    }
}
