//! Benchmark problem generation: meshed donut sectors and stands, synthetic
//! SPD patterns, and load cases.

mod donut;
mod element;
mod load;
mod mesh;
mod pattern;
mod stand;
mod synthetic;

pub use donut::{build_donut_pattern, build_donut_pattern_with, DonutGeometry, InnerBoundary};
pub use element::{plane_strain_matrix, plane_strain_stiffness, signed_area, thermal_stiffness};
pub use load::{periodic_load, random_load, LoadCase};
pub use mesh::{NodeTags, PatternMesh};
pub use pattern::{Pattern, Physics, Side};
pub use stand::{build_stand_pattern, StandBase, StandGeometry};
pub use synthetic::{synthetic_pattern, synthetic_spd_matrix, Spectrum};

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FemError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("element {0} has non-positive area")]
    DegenerateElement(usize),
    #[error("interface mismatch: expected {expected} nodes, found {found}")]
    InterfaceMismatch { expected: usize, found: usize },
    #[error("operation requires elasticity physics")]
    NotElastic,
    #[error("node {0} not found")]
    NodeNotFound(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
