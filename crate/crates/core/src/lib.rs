//! Dual domain decomposition (FETI) for structures built from repeated
//! patterns, with multi-RHS and multivector acceleration.

pub mod decomposition;
pub mod exec;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod oracle;
pub mod scenarios;
pub mod solver;
