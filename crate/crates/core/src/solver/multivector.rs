use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::classical::precondition;
use super::coarse::CoarseProblem;
use super::engine::{finish, is_converged, setup, Tracker};
use super::map::MultivectorMap;
use super::{Method, Solution, SolveError, SolverOptions};
use crate::decomposition::{Batching, Preconditioner, StructureModel};
use crate::fem::LoadCase;
use crate::linalg::{inv_sqrt_sym, norm, DenseBlock};

/// Relative tolerance of the commutation probe.
const COMMUTE_TOL: f64 = 1e-8;

fn commutes(map: &MultivectorMap, images: &DenseBlock) -> bool {
    let base = images.col(0);
    let scale = norm(base).max(f64::MIN_POSITIVE);
    (1..map.len()).all(|r| {
        let moved = map.apply_recipe(r, base);
        let diff: f64 = moved
            .iter()
            .zip(images.col(r))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff <= COMMUTE_TOL * scale
    })
}

/// Checks on a random probe `x` that every recipe `π` satisfies
/// `A π x = π A x` for `A` in {F, M⁻¹, Q}. Returns the verdict and the
/// number of Neumann batches spent.
pub fn recipes_commute(
    model: &StructureModel,
    coarse: &CoarseProblem,
    kind: Preconditioner,
    map: &MultivectorMap,
    seed: u64,
) -> Result<(bool, usize), SolveError> {
    if map.len() <= 1 || model.n_lambda() == 0 {
        return Ok((true, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..model.n_lambda())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let xs = map.expand(&x)?;
    let (fx, batches) = model.dual_operator_apply_counted(&xs, Batching::PerPattern)?;
    if !commutes(map, &fx) {
        return Ok((false, batches));
    }
    let mx = model.preconditioner_apply(kind, &xs)?;
    if !commutes(map, &mx) {
        return Ok((false, batches));
    }
    let qx = coarse.project(&xs);
    Ok((commutes(map, &qx), batches))
}

/// `W - Σ_k W_k (P_kᵀ W)`
fn orthogonalize(w: &mut DenseBlock, stored: &[(DenseBlock, DenseBlock)]) {
    for (wk, pk) in stored {
        let c = pk.tr_mul(w);
        w.add_scaled(-1.0, &wk.mul(&c));
    }
}

fn next_block(
    z: Vec<f64>,
    map: &MultivectorMap,
    coarse: &CoarseProblem,
    stored: &[(DenseBlock, DenseBlock)],
    reorth: bool,
    single: bool,
) -> Result<DenseBlock, SolveError> {
    if reorth && single {
        let mut zb = DenseBlock::column_vector(&z);
        orthogonalize(&mut zb, stored);
        return map.expand(zb.col(0));
    }
    let mut w = coarse.project(&map.expand(&z)?);
    if reorth {
        orthogonalize(&mut w, stored);
    }
    Ok(w)
}

/// Block CG on the dual interface problem where each new direction is
/// expanded into a block by the interface permutations of `map`.
pub fn solve_multivector(
    model: &StructureModel,
    loads: &LoadCase,
    map: &MultivectorMap,
    opts: &SolverOptions,
) -> Result<Solution, SolveError> {
    let mut tr = Tracker::new(Method::Multivector);
    let s = setup(model, loads, opts, Batching::PerPattern, &mut tr)?;
    let reorth = opts.reorthogonalize.unwrap_or(true);
    let mut lambda = s.lambda.clone();
    let mut r = s.r.clone();
    if is_converged(s.r0, s.r0, opts.tol) {
        return finish(model, loads, &s, lambda, tr, true);
    }
    let single = if reorth {
        // the probe is setup work, charged to iteration 0
        let (ok, b) = recipes_commute(model, &s.coarse, opts.precond, map, opts.probe_seed)?;
        tr.batches += b;
        tr.record.cum_local_solve_batches[0] += b;
        ok
    } else {
        false
    };
    tr.record.single_vector_reorth = single;
    let mut stored: Vec<(DenseBlock, DenseBlock)> = Vec::new();
    let z = precondition(model, &s.coarse, opts.precond, &r)?;
    let mut w = next_block(z, map, &s.coarse, &stored, reorth, single)?;
    let mut converged = false;
    for j in 1..=opts.max_iter {
        let fw = tr.apply_f(model, &w, Batching::PerPattern)?;
        let p = s.coarse.project_t(&fw);
        let eta = w.tr_mul(&p);
        let (n, rank) = inv_sqrt_sym(&eta, opts.rank_tol)?;
        if rank == 0 {
            let rn = norm(&r);
            if is_converged(rn, s.r0, opts.tol) {
                converged = true;
                break;
            }
            return Err(SolveError::TotalRankCollapse {
                iteration: j,
                relative_residual: rn / s.r0,
            });
        }
        let wn = w.mul(&n);
        let pn = p.mul(&n);
        let alpha = wn.tr_mul_vec(&r);
        let dl = wn.mul_vec(&alpha);
        let dr = pn.mul_vec(&alpha);
        lambda.iter_mut().zip(&dl).for_each(|(x, d)| *x += d);
        r.iter_mut().zip(&dr).for_each(|(x, d)| *x -= d);
        let rn = norm(&r);
        tr.push(
            rn,
            rank,
            w.cols() - rank,
            s.coarse.constraint_residual(&lambda, &s.e),
        );
        if !rn.is_finite() {
            return Err(SolveError::BreakdownZeroDenominator {
                iteration: j,
                value: rn,
            });
        }
        stored.push((wn, pn));
        if !reorth {
            stored.drain(..stored.len() - 1);
        }
        if is_converged(rn, s.r0, opts.tol) {
            converged = true;
            break;
        }
        let z = precondition(model, &s.coarse, opts.precond, &r)?;
        w = next_block(z, map, &s.coarse, &stored, true, single && reorth)?;
    }
    finish(model, loads, &s, lambda, tr, converged)
}
