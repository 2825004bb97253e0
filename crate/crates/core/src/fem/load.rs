use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::StructureModel;

/// Generalized forces of every occurrence, in its pattern frame and over the
/// pattern's free dofs (Dirichlet dofs are eliminated, so they carry none).
#[derive(Clone, Debug, PartialEq)]
pub struct LoadCase {
    pub forces: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

impl LoadCase {
    pub fn zeros(model: &StructureModel) -> Self {
        LoadCase {
            forces: model
                .occurrences()
                .iter()
                .map(|o| vec![0.0; model.pattern(o.pattern).n_dofs()])
                .collect(),
            seed: None,
        }
    }
}

/// Independent uniform `[-1, 1]` force per dof and occurrence, drawn from a
/// ChaCha8 stream seeded with `seed`. Not periodic, not pre-balanced.
pub fn random_load(model: &StructureModel, seed: u64) -> LoadCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forces = model
        .occurrences()
        .iter()
        .map(|o| {
            (0..model.pattern(o.pattern).n_dofs())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    LoadCase {
        forces,
        seed: Some(seed),
    }
}

/// Same draw for every occurrence of a pattern: periodic loading.
pub fn periodic_load(model: &StructureModel, seed: u64) -> LoadCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_pattern: Vec<Vec<f64>> = (0..model.patterns().len())
        .map(|p| {
            (0..model.pattern(p).n_dofs())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    LoadCase {
        forces: model
            .occurrences()
            .iter()
            .map(|o| per_pattern[o.pattern].clone())
            .collect(),
        seed: Some(seed),
    }
}
