use std::f64::consts::PI;

use super::mesh::{NodeTags, PatternMesh};
use super::pattern::{Pattern, Physics};
use super::FemError;
use crate::exec::Execution;

/// Annulus sector of angle `2π / n_sectors` meshed on a structured
/// `radial_divs x angular_divs` grid, each quad split into two triangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DonutGeometry {
    pub n_sectors: usize,
    pub r_inner: f64,
    pub r_outer: f64,
    pub radial_divs: usize,
    pub angular_divs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerBoundary {
    /// Inner arc fixed to zero.
    Clamped,
    Free,
    /// Only the middle inner-arc node is fixed.
    Hinged,
}

impl DonutGeometry {
    pub fn sector_angle(&self) -> f64 {
        2.0 * PI / self.n_sectors as f64
    }

    /// Node at radial index `i` (0 = inner arc) and angular index `j`
    /// (0 = side `a`, `angular_divs` = side `b`).
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.radial_divs + 1) + i
    }

    /// Middle node of the inner arc.
    pub fn hinge_node(&self) -> Result<usize, FemError> {
        if self.angular_divs % 2 != 0 {
            return Err(FemError::InvalidGeometry(
                "hinge needs an even number of angular divisions".into(),
            ));
        }
        Ok(self.node(0, self.angular_divs / 2))
    }

    /// `count` consecutive outer-arc nodes starting at angular index `j0`.
    pub fn outer_segment(&self, j0: usize, count: usize) -> Result<Vec<usize>, FemError> {
        if count == 0 || j0 == 0 || j0 + count > self.angular_divs {
            return Err(FemError::InvalidGeometry(format!(
                "outer segment [{j0}, {}) must stay strictly inside the arc (0, {})",
                j0 + count,
                self.angular_divs
            )));
        }
        Ok((j0..j0 + count)
            .map(|j| self.node(self.radial_divs, j))
            .collect())
    }

    fn validate(&self) -> Result<(), FemError> {
        if self.n_sectors < 3 {
            return Err(FemError::InvalidGeometry(format!(
                "n_sectors must be >= 3, got {}",
                self.n_sectors
            )));
        }
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(FemError::InvalidGeometry(format!(
                "need 0 < r_inner < r_outer, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        if self.radial_divs == 0 || self.angular_divs == 0 {
            return Err(FemError::InvalidGeometry("divisions must be >= 1".into()));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<PatternMesh, FemError> {
        self.validate()?;
        let (nr, na) = (self.radial_divs, self.angular_divs);
        let theta = self.sector_angle();
        let mut nodes = Vec::with_capacity((nr + 1) * (na + 1));
        let mut tags = Vec::with_capacity(nodes.capacity());
        for j in 0..=na {
            let phi = theta * j as f64 / na as f64;
            for i in 0..=nr {
                let r = self.r_inner + (self.r_outer - self.r_inner) * i as f64 / nr as f64;
                nodes.push([r * phi.cos(), r * phi.sin()]);
                let mut t = NodeTags::empty();
                t.set(NodeTags::INNER_ARC, i == 0);
                t.set(NodeTags::OUTER_ARC, i == nr);
                t.set(NodeTags::INTERFACE_A, j == 0);
                t.set(NodeTags::INTERFACE_B, j == na);
                tags.push(t);
            }
        }
        let mut elements = Vec::with_capacity(2 * nr * na);
        for j in 0..na {
            for i in 0..nr {
                let n00 = self.node(i, j);
                let n10 = self.node(i + 1, j);
                let n11 = self.node(i + 1, j + 1);
                let n01 = self.node(i, j + 1);
                elements.push([n00, n10, n11]);
                elements.push([n00, n11, n01]);
            }
        }
        PatternMesh::new(nodes, elements, tags)
    }
}

/// Builds the donut sector pattern with sides `a` (angle 0) and `b`
/// (angle `2π / n_sectors`), nodes ordered by increasing radius.
pub fn build_donut_pattern(
    geom: &DonutGeometry,
    physics: Physics,
    inner: InnerBoundary,
) -> Result<Pattern, FemError> {
    build_donut_pattern_with(geom, physics, inner, Execution::default())
}

pub fn build_donut_pattern_with(
    geom: &DonutGeometry,
    physics: Physics,
    inner: InnerBoundary,
    exec: Execution,
) -> Result<Pattern, FemError> {
    let mesh = geom.mesh()?;
    let fixed: Vec<usize> = match inner {
        InnerBoundary::Clamped => (0..=geom.angular_divs).map(|j| geom.node(0, j)).collect(),
        InnerBoundary::Free => Vec::new(),
        InnerBoundary::Hinged => {
            if !physics.is_elastic() {
                return Err(FemError::NotElastic);
            }
            vec![geom.hinge_node()?]
        }
    };
    let name = format!(
        "donut{}-{}",
        geom.n_sectors,
        if physics.is_elastic() {
            "elastic"
        } else {
            "thermal"
        }
    );
    let mut pattern = Pattern::assemble(&name, mesh, physics, &fixed, exec)?;
    let first = if inner == InnerBoundary::Clamped {
        1
    } else {
        0
    };
    let side_a: Vec<usize> = (first..=geom.radial_divs)
        .map(|i| geom.node(i, 0))
        .collect();
    let side_b: Vec<usize> = (first..=geom.radial_divs)
        .map(|i| geom.node(i, geom.angular_divs))
        .collect();
    pattern.add_side("a", &side_a)?;
    pattern.add_side("b", &side_b)?;
    Ok(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DonutGeometry {
        DonutGeometry {
            n_sectors: 3,
            r_inner: 1.0,
            r_outer: 2.0,
            radial_divs: 4,
            angular_divs: 6,
        }
    }

    #[test]
    fn interface_sides_match_under_rotation() {
        let g = small();
        let mesh = g.mesh().unwrap();
        let a = mesh.nodes_with(NodeTags::INTERFACE_A);
        let b = mesh.nodes_with(NodeTags::INTERFACE_B);
        assert_eq!(a.len(), 5);
        assert_eq!(b.len(), 5);
        let (s, c) = g.sector_angle().sin_cos();
        for (&na, &nb) in a.iter().zip(&b) {
            let p = mesh.nodes[na];
            let q = mesh.nodes[nb];
            assert!((c * p[0] - s * p[1] - q[0]).abs() < 1e-14);
            assert!((s * p[0] + c * p[1] - q[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut g = small();
        g.n_sectors = 2;
        assert!(matches!(g.mesh(), Err(FemError::InvalidGeometry(_))));
        let mut g = small();
        g.r_outer = 0.5;
        assert!(matches!(g.mesh(), Err(FemError::InvalidGeometry(_))));
        let mut g = small();
        g.radial_divs = 0;
        assert!(g.mesh().is_err());
    }

    #[test]
    fn unconstrained_thermal_rows_sum_to_zero() {
        let p = build_donut_pattern(&small(), Physics::Thermal, InnerBoundary::Free).unwrap();
        let k = p.stiffness();
        for i in 0..k.rows() {
            let s: f64 = (0..k.cols()).map(|j| k.get(i, j)).sum();
            assert!(s.abs() < 1e-10);
        }
        assert_eq!(p.kernel_dim(), 1);
    }

    #[test]
    fn clamped_thermal_is_definite() {
        let p = build_donut_pattern(&small(), Physics::Thermal, InnerBoundary::Clamped).unwrap();
        assert_eq!(p.kernel_dim(), 0);
        assert_eq!(p.sides()[0].dofs.len(), 4);
        assert_eq!(p.n_dofs(), 4 * 7);
    }

    #[test]
    fn outer_segment_bounds() {
        let g = small();
        assert!(g.outer_segment(0, 3).is_err());
        assert!(g.outer_segment(2, 5).is_err());
        assert_eq!(g.outer_segment(2, 3).unwrap().len(), 3);
        let mut odd = g;
        odd.angular_divs = 5;
        assert!(odd.hinge_node().is_err());
    }
}
