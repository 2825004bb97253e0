//! Ready-made structures: periodic donuts (thermal, elastic, hinged), donuts
//! with stands, and the synthetic SPD academic cases, each with the
//! multivector map that exploits its repetitions.

use std::f64::consts::FRAC_PI_2;

use crate::decomposition::{DecompositionError, ModelBuilder, SideRef, StructureModel};
use crate::exec::Execution;
use crate::fem::{
    build_donut_pattern_with, build_stand_pattern, synthetic_pattern, DonutGeometry, FemError,
    InnerBoundary, Pattern, Physics, Spectrum, StandBase, StandGeometry,
};
use crate::solver::{MultivectorMap, SolveError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// A structure and the multivector map matching its repetitions.
#[derive(Debug)]
pub struct Scenario {
    pub model: StructureModel,
    pub map: MultivectorMap,
}

/// Annulus sector discretization shared by the donut scenarios.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DonutParams {
    pub r_inner: f64,
    pub r_outer: f64,
    pub radial_divs: usize,
    pub angular_divs: usize,
}

impl Default for DonutParams {
    /// About 2000 dofs with about 100 on the interface for a scalar field.
    fn default() -> Self {
        DonutParams {
            r_inner: 1.0,
            r_outer: 10.0,
            radial_divs: 49,
            angular_divs: 40,
        }
    }
}

impl DonutParams {
    /// About 2000 dofs with about 100 on the interface for plane strain.
    pub fn elastic_default() -> Self {
        DonutParams {
            r_outer: 2.5,
            radial_divs: 24,
            ..Self::default()
        }
    }

    /// Thick ring for the hinged case.
    pub fn hinged_default() -> Self {
        DonutParams {
            radial_divs: 24,
            ..Self::default()
        }
    }

    pub fn geometry(&self, n_sectors: usize) -> DonutGeometry {
        DonutGeometry {
            n_sectors,
            r_inner: self.r_inner,
            r_outer: self.r_outer,
            radial_divs: self.radial_divs,
            angular_divs: self.angular_divs,
        }
    }
}

/// Nearly incompressible plane strain used by the clamped elastic donut.
pub fn donut_material() -> Physics {
    Physics::PlaneStrain {
        young: 1.0,
        poisson: 0.49,
    }
}

/// Stand glued to `width_divs + 1` consecutive outer-arc nodes starting at
/// angular index `attach_start`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandParams {
    pub height: f64,
    pub width_divs: usize,
    pub height_divs: usize,
    pub attach_start: usize,
}

impl Default for StandParams {
    fn default() -> Self {
        StandParams {
            height: 0.5,
            width_divs: 10,
            height_divs: 10,
            attach_start: 15,
        }
    }
}

/// Occurrence `s` sits at angle `-s θ`, so that side `a` of `s` meets side
/// `b` of `s + 1`. Interfaces `0..n` form the ring, interface `k` joining
/// `(k, a)` to `(k + 1, b)`.
fn ring(
    builder: &mut ModelBuilder,
    pattern: usize,
    n: usize,
    theta: f64,
) -> Result<Vec<usize>, ScenarioError> {
    let p = builder.pattern(pattern);
    let (a, b) = (side(p, "a")?, side(p, "b")?);
    for s in 0..n {
        builder.add_occurrence(pattern, -(s as f64) * theta, [0.0, 0.0]);
    }
    let mut itfs = Vec::with_capacity(n);
    for s in 0..n {
        itfs.push(builder.connect(
            SideRef {
                occurrence: s,
                side: a,
            },
            SideRef {
                occurrence: (s + 1) % n,
                side: b,
            },
        )?);
    }
    Ok(itfs)
}

fn side(p: &Pattern, name: &str) -> Result<usize, ScenarioError> {
    p.side(name).ok_or_else(|| {
        FemError::InvalidGeometry(format!("pattern '{}' has no side '{name}'", p.name)).into()
    })
}

fn periodic_donut(
    n: usize,
    params: &DonutParams,
    physics: Physics,
    inner: InnerBoundary,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    let geom = params.geometry(n);
    let pattern = build_donut_pattern_with(&geom, physics, inner, exec)?;
    let mut b = ModelBuilder::new().execution(exec);
    let p = b.add_pattern(pattern);
    let itfs = ring(&mut b, p, n, geom.sector_angle())?;
    let model = b.build()?;
    let map = MultivectorMap::cyclic(&model, &itfs)?;
    Ok(Scenario { model, map })
}

/// Periodic thermal donut, inner arc at zero temperature.
pub fn thermal_donut(
    n: usize,
    params: &DonutParams,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    periodic_donut(n, params, Physics::Thermal, InnerBoundary::Clamped, exec)
}

/// Periodic plane-strain donut with clamped inner arc.
pub fn elastic_donut(
    n: usize,
    params: &DonutParams,
    physics: Physics,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    if !physics.is_elastic() {
        return Err(FemError::NotElastic.into());
    }
    periodic_donut(n, params, physics, InnerBoundary::Clamped, exec)
}

/// Periodic plane-strain donut whose sectors are each held by a single
/// hinge: every occurrence floats with one rotation mode.
pub fn hinged_elastic_donut(
    n: usize,
    params: &DonutParams,
    physics: Physics,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    if !physics.is_elastic() {
        return Err(FemError::NotElastic.into());
    }
    periodic_donut(n, params, physics, InnerBoundary::Hinged, exec)
}

/// Occurrences carrying a stand, by number of stands.
pub fn stand_hosts(n: usize, n_stands: usize) -> Vec<usize> {
    match n_stands {
        1 => vec![n - 1],
        _ => vec![0, n / 2],
    }
}

fn donut_with_stands(
    n: usize,
    n_stands: usize,
    params: &DonutParams,
    stand: &StandParams,
    physics: Physics,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    let geom = params.geometry(n);
    let theta = geom.sector_angle();
    let inner = InnerBoundary::Clamped;
    let mut donut = build_donut_pattern_with(&geom, physics, inner, exec)?;
    let count = stand.width_divs + 1;
    let attach = geom.outer_segment(stand.attach_start, count)?;
    donut.add_side("stand", &attach)?;
    let phi0 = theta * stand.attach_start as f64 / geom.angular_divs as f64;
    let phi1 = theta * (stand.attach_start + stand.width_divs) as f64 / geom.angular_divs as f64;
    let width = 2.0 * geom.r_outer * (0.5 * (phi1 - phi0)).sin();
    let sg = StandGeometry {
        width,
        height: stand.height,
        width_divs: stand.width_divs,
        height_divs: stand.height_divs,
    };
    let stand_pattern = build_stand_pattern(&sg, physics, StandBase::Fixed, count)?;

    let mut b = ModelBuilder::new().execution(exec);
    let p = b.add_pattern(donut);
    let ps = b.add_pattern(stand_pattern);
    let ring_itfs = ring(&mut b, p, n, theta)?;
    let host_side = side(b.pattern(p), "stand")?;
    let top = side(b.pattern(ps), "top")?;
    let mut stand_itfs = Vec::new();
    for host in stand_hosts(n, n_stands) {
        // stand y axis points inward along the radius through the segment middle
        let phi = 0.5 * (phi0 + phi1) - host as f64 * theta;
        let psi = phi + FRAC_PI_2;
        let chord_mid = geom.r_outer * (0.5 * (phi1 - phi0)).cos();
        let translation = [
            chord_mid * phi.cos() + stand.height * psi.sin(),
            chord_mid * phi.sin() - stand.height * psi.cos(),
        ];
        let o = b.add_occurrence(ps, psi, translation);
        stand_itfs.push(b.connect(
            SideRef {
                occurrence: host,
                side: host_side,
            },
            SideRef {
                occurrence: o,
                side: top,
            },
        )?);
    }
    let model = b.build()?;
    let map = if stand_itfs.len() == 1 {
        MultivectorMap::cyclic(&model, &ring_itfs)?
    } else {
        MultivectorMap::cyclic_with_swap(&model, &ring_itfs, &stand_itfs)?
    };
    Ok(Scenario { model, map })
}

/// Clamped donut with one stand (fixed base) on the last sector.
pub fn donut_one_stand(
    n: usize,
    params: &DonutParams,
    stand: &StandParams,
    physics: Physics,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    donut_with_stands(n, 1, params, stand, physics, exec)
}

/// Clamped donut with two identical stands on sectors `0` and `n / 2`.
pub fn donut_two_stands(
    n: usize,
    params: &DonutParams,
    stand: &StandParams,
    physics: Physics,
    exec: Execution,
) -> Result<Scenario, ScenarioError> {
    donut_with_stands(n, 2, params, stand, physics, exec)
}

/// Periodic chain of synthetic SPD patterns with two sides of `side_size`.
pub fn synthetic_periodic(
    n: usize,
    side_size: usize,
    spectrum: Spectrum,
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    let pattern = synthetic_pattern("synthetic", side_size, &["a", "b"], spectrum, seed)?;
    let mut b = ModelBuilder::new();
    let p = b.add_pattern(pattern);
    let itfs = ring(&mut b, p, n, 0.0)?;
    let model = b.build()?;
    let map = MultivectorMap::cyclic(&model, &itfs)?;
    Ok(Scenario { model, map })
}

/// Synthetic ring with a third side on every pattern, glued on the last
/// occurrence only to a synthetic stand pattern.
pub fn synthetic_one_stand(
    n: usize,
    side_size: usize,
    spectrum: Spectrum,
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    let host = synthetic_pattern("synthetic", side_size, &["a", "b", "stand"], spectrum, seed)?;
    let stand = synthetic_pattern(
        "synthetic-stand",
        side_size,
        &["top"],
        spectrum,
        seed.wrapping_add(1),
    )?;
    let mut b = ModelBuilder::new();
    let p = b.add_pattern(host);
    let ps = b.add_pattern(stand);
    let itfs = ring(&mut b, p, n, 0.0)?;
    let o = b.add_occurrence(ps, 0.0, [0.0, 0.0]);
    b.connect(
        SideRef {
            occurrence: n - 1,
            side: 2,
        },
        SideRef {
            occurrence: o,
            side: 0,
        },
    )?;
    let model = b.build()?;
    let map = MultivectorMap::cyclic(&model, &itfs)?;
    Ok(Scenario { model, map })
}
