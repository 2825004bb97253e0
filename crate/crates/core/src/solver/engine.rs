use std::time::Instant;

use super::coarse::{build_coarse_with, CoarseProblem};
use super::{ConvergenceRecord, Method, Solution, SolveError, SolverOptions};
use crate::decomposition::{Batching, StructureModel};
use crate::fem::LoadCase;
use crate::linalg::{norm, DenseBlock};

/// Initial state shared by every engine (table rows 1-3).
pub(super) struct Setup {
    pub e: Vec<f64>,
    pub coarse: CoarseProblem,
    pub lambda: Vec<f64>,
    pub r: Vec<f64>,
    pub r0: f64,
}

pub(super) struct Tracker {
    start: Instant,
    pub batches: usize,
    pub record: ConvergenceRecord,
}

impl Tracker {
    pub fn new(method: Method) -> Self {
        Tracker {
            start: Instant::now(),
            batches: 0,
            record: ConvergenceRecord {
                method: Some(method),
                ..Default::default()
            },
        }
    }

    pub fn push(&mut self, residual: f64, active: usize, dropped: usize, constraint: f64) {
        let r = &mut self.record;
        r.residual_norms.push(residual);
        r.active_directions.push(active);
        r.dropped_directions.push(dropped);
        r.cum_local_solve_batches.push(self.batches);
        r.wall_ms.push(self.start.elapsed().as_secs_f64() * 1e3);
        r.constraint_residuals.push(constraint);
        r.iterations = r.residual_norms.len() - 1;
    }

    pub fn apply_f(
        &mut self,
        model: &StructureModel,
        w: &DenseBlock,
        batching: Batching,
    ) -> Result<DenseBlock, SolveError> {
        let (y, b) = model.dual_operator_apply_counted(w, batching)?;
        self.batches += b;
        Ok(y)
    }
}

pub(super) fn setup(
    model: &StructureModel,
    loads: &LoadCase,
    opts: &SolverOptions,
    batching: Batching,
    tracker: &mut Tracker,
) -> Result<Setup, SolveError> {
    opts.validate()?;
    let (d, b) = model.natural_rhs_with(loads, batching)?;
    tracker.batches += b;
    let coarse = build_coarse_with(model, opts.coarse_kind(), opts.coarse_path)?;
    let e = model.rigid_rhs(&coarse.modes, loads)?;
    let lambda = coarse.initial_lambda(&e);
    let flam = tracker.apply_f(model, &DenseBlock::column_vector(&lambda), batching)?;
    let res: Vec<f64> = d.iter().zip(flam.col(0)).map(|(a, b)| a - b).collect();
    let r = coarse.project_t_vec(&res);
    let r0 = norm(&r);
    tracker.push(r0, 0, 0, coarse.constraint_residual(&lambda, &e));
    Ok(Setup {
        e,
        coarse,
        lambda,
        r,
        r0,
    })
}

/// Local displacements `u⁽ˢ⁾ = K⁺(f - tᵀBᵀλ) + R α` with rigid amplitudes
/// chosen by the coarse problem so that the interface jump vanishes.
pub fn recover_solution(
    model: &StructureModel,
    loads: &LoadCase,
    lambda: &[f64],
    coarse: &CoarseProblem,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), SolveError> {
    let mut u = model.local_displacements(loads, lambda)?;
    if coarse.n_modes() == 0 {
        return Ok((u, Vec::new()));
    }
    let (d, _) = model.natural_rhs(loads)?;
    let fl = model.dual_operator_apply(&DenseBlock::column_vector(lambda))?;
    let res: Vec<f64> = d.iter().zip(fl.col(0)).map(|(a, b)| a - b).collect();
    let alpha: Vec<f64> = coarse
        .amplitudes(&DenseBlock::column_vector(&res))
        .col(0)
        .iter()
        .map(|a| -a)
        .collect();
    for (j, &(o, m)) in coarse.modes.columns.iter().enumerate() {
        let r = model.occurrence_pattern(o).factor().kernel_basis().col(m);
        for (x, y) in u[o].iter_mut().zip(r) {
            *x += alpha[j] * y;
        }
    }
    Ok((u, alpha))
}

/// Recovers displacements and packages the run, or reports non-convergence.
pub(super) fn finish(
    model: &StructureModel,
    loads: &LoadCase,
    setup: &Setup,
    lambda: Vec<f64>,
    tracker: Tracker,
    converged: bool,
) -> Result<Solution, SolveError> {
    let (u, alpha) = recover_solution(model, loads, &lambda, &setup.coarse)?;
    let mut record = tracker.record;
    record.converged = converged;
    let last = record.residual_norms.last().copied().unwrap_or(0.0);
    let sol = Solution {
        lambda,
        u,
        alpha,
        record,
    };
    if converged {
        Ok(sol)
    } else {
        Err(SolveError::MaxIterationsExceeded {
            iterations: sol.record.iterations,
            relative_residual: if setup.r0 > 0.0 { last / setup.r0 } else { 0.0 },
            partial: Box::new(sol),
        })
    }
}

pub(super) fn is_converged(r: f64, r0: f64, tol: f64) -> bool {
    r0 == 0.0 || tol >= 1.0 || r <= tol * r0
}
