//! Synthetic SPD "pattern Schur complements" for the academic tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pattern::Pattern;
use super::FemError;
use crate::exec::Execution;
use crate::linalg::DenseBlock;

/// Log-uniform eigenvalue range of a synthetic matrix.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Spectrum {
    pub min: f64,
    pub max: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Spectrum {
            min: 1e-4,
            max: 1.0,
        }
    }
}

/// `Qᵀ Λ Q` with `Q` the orthogonal factor of a uniform random matrix and
/// `Λ` drawn log-uniformly in `[spectrum.min, spectrum.max]`. Seeded ChaCha8.
pub fn synthetic_spd_matrix(
    size: usize,
    spectrum: Spectrum,
    seed: u64,
) -> Result<DenseBlock, FemError> {
    if !(spectrum.min > 0.0 && spectrum.min <= spectrum.max && spectrum.max.is_finite()) {
        return Err(FemError::InvalidGeometry(format!(
            "spectrum needs 0 < min <= max, got [{}, {}]",
            spectrum.min, spectrum.max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let ratio = (spectrum.max / spectrum.min).ln();
    let lambda: Vec<f64> = (0..size)
        .map(|_| spectrum.min * (ratio * rng.random::<f64>()).exp())
        .collect();
    let mut k = DenseBlock::zeros(size, size);
    for j in 0..size {
        for i in 0..=j {
            let v: f64 = (0..size).map(|m| q[(i, m)] * lambda[m] * q[(j, m)]).sum();
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(k)
}

/// Synthetic pattern whose dofs are split into consecutive sides of
/// `side_size` dofs each, named after `side_names`. All dofs sit on sides.
pub fn synthetic_pattern(
    name: &str,
    side_size: usize,
    side_names: &[&str],
    spectrum: Spectrum,
    seed: u64,
) -> Result<Pattern, FemError> {
    if side_size == 0 || side_names.is_empty() {
        return Err(FemError::InvalidGeometry(
            "synthetic pattern needs sides".into(),
        ));
    }
    let n = side_size * side_names.len();
    let k = synthetic_spd_matrix(n, spectrum, seed)?;
    let mut p = Pattern::from_matrix(name, k, Execution::default())?;
    for (s, side) in side_names.iter().enumerate() {
        let nodes: Vec<usize> = (s * side_size..(s + 1) * side_size).collect();
        p.add_side(side, &nodes)?;
    }
    Ok(p)
}
