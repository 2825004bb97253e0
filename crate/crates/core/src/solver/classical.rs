use super::coarse::CoarseProblem;
use super::engine::{finish, is_converged, setup, Tracker};
use super::{Method, Solution, SolveError, SolverOptions};
use crate::decomposition::{Batching, Preconditioner, StructureModel};
use crate::fem::LoadCase;
use crate::linalg::{axpy, dot, norm, DenseBlock};

/// Relative threshold on `wᵀ F w` below which the iteration has broken down.
pub(super) const BREAKDOWN_TOL: f64 = 1e-14;

/// `Q M⁻¹ r`
pub(super) fn precondition(
    model: &StructureModel,
    coarse: &CoarseProblem,
    kind: Preconditioner,
    r: &[f64],
) -> Result<Vec<f64>, SolveError> {
    let z = model.preconditioner_apply(kind, &DenseBlock::column_vector(r))?;
    Ok(coarse.project(&z).into_vec())
}

/// Projected PCG on the dual interface problem, one Neumann solve per
/// occurrence.
pub fn solve_classical(
    model: &StructureModel,
    loads: &LoadCase,
    opts: &SolverOptions,
) -> Result<Solution, SolveError> {
    run(
        model,
        loads,
        opts,
        Batching::PerOccurrence,
        Method::Classical,
    )
}

/// Same iterates as [`solve_classical`], with the Neumann solves of all
/// occurrences of a pattern batched into one multi-RHS solve.
pub fn solve_classical_mrhs(
    model: &StructureModel,
    loads: &LoadCase,
    opts: &SolverOptions,
) -> Result<Solution, SolveError> {
    run(model, loads, opts, Batching::PerPattern, Method::Mrhs)
}

fn run(
    model: &StructureModel,
    loads: &LoadCase,
    opts: &SolverOptions,
    batching: Batching,
    method: Method,
) -> Result<Solution, SolveError> {
    let mut tr = Tracker::new(method);
    let s = setup(model, loads, opts, batching, &mut tr)?;
    let reorth = opts.reorthogonalize.unwrap_or(false);
    let mut lambda = s.lambda.clone();
    let mut r = s.r.clone();
    if is_converged(s.r0, s.r0, opts.tol) {
        return finish(model, loads, &s, lambda, tr, true);
    }
    let mut w = precondition(model, &s.coarse, opts.precond, &r)?;
    // (w_i, p_i, w_iᵀ p_i)
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut converged = false;
    for j in 1..=opts.max_iter {
        let fw = tr.apply_f(model, &DenseBlock::column_vector(&w), batching)?;
        let p = s.coarse.project_t(&fw).into_vec();
        let wp = dot(&w, &p);
        if !(wp > BREAKDOWN_TOL * norm(&w) * norm(&p)) {
            return Err(SolveError::BreakdownZeroDenominator {
                iteration: j,
                value: wp,
            });
        }
        let alpha = dot(&w, &r) / wp;
        axpy(alpha, &w, &mut lambda);
        axpy(-alpha, &p, &mut r);
        let rn = norm(&r);
        tr.push(rn, 1, 0, s.coarse.constraint_residual(&lambda, &s.e));
        if !rn.is_finite() {
            return Err(SolveError::BreakdownZeroDenominator {
                iteration: j,
                value: rn,
            });
        }
        if reorth {
            history.push((w, p, wp));
        } else {
            history.clear();
            history.push((w, p, wp));
        }
        if is_converged(rn, s.r0, opts.tol) {
            converged = true;
            break;
        }
        let z = precondition(model, &s.coarse, opts.precond, &r)?;
        let mut next = z.clone();
        for (wi, pi, wpi) in &history {
            let beta = -dot(pi, &z) / wpi;
            axpy(beta, wi, &mut next);
        }
        w = next;
    }
    finish(model, loads, &s, lambda, tr, converged)
}
