//! Structures made of repeated patterns: occurrences, interfaces, the signed
//! assembly `B t`, and the dual operators built on top of it.

mod interface;
mod model;
mod operators;
mod rigid;

pub(crate) use interface::rotate_add;
pub use interface::{Combine, InterfaceBlock};
pub(crate) use model::UnionFind;
pub use model::{Interface, LocalGroup, ModelBuilder, Occurrence, SideRef, StructureModel};
pub use operators::{Batching, Preconditioner};
pub use rigid::{GBlock, RigidModes};

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecompositionError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("interface mismatch: sides have {expected} and {found} dofs")]
    InterfaceMismatch { expected: usize, found: usize },
    #[error("side {} of occurrence {} is already connected", .0.side, .0.occurrence)]
    SideAlreadyConnected(SideRef),
    #[error("side {} of occurrence {} does not exist", .0.side, .0.occurrence)]
    UnknownSide(SideRef),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("floating occurrences come from several patterns")]
    MixedPatterns,
    #[error("irregular layout: {0}")]
    IrregularLayout(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
