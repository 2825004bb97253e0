use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use feti_core::exec::Execution;
use feti_core::fem::{random_load, Physics};
use feti_core::linalg::{factor_sym_with, DenseBlock};
use feti_core::scenarios::{elastic_donut, DonutParams};
use feti_core::solver::{solve_multivector, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn spd(n: usize) -> DenseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = DenseBlock::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut a = b.tr_mul(&b);
    for i in 0..n {
        a.add_at(i, i, n as f64);
    }
    a
}

fn dense_kernels(c: &mut Criterion) {
    let a = spd(400);
    let rhs = DenseBlock::from_fn(400, 32, |i, j| ((i * 31 + j * 7) % 13) as f64 - 6.0);
    let mut g = c.benchmark_group("dense");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("factor_sym", name), &exec, |bch, &e| {
            bch.iter(|| factor_sym_with(&a, 1e-10, e).unwrap())
        });
        let f = factor_sym_with(&a, 1e-10, exec).unwrap();
        g.bench_with_input(
            BenchmarkId::new("pseudo_solve_block", name),
            &exec,
            |bch, &e| bch.iter(|| f.pseudo_solve_block_with(&rhs, e).unwrap()),
        );
    }
    g.finish();
}

fn structure(c: &mut Criterion) {
    let params = DonutParams {
        r_inner: 1.0,
        r_outer: 2.5,
        radial_divs: 12,
        angular_divs: 20,
    };
    let mut g = c.benchmark_group("structure");
    g.sample_size(10);
    for (name, exec) in MODES {
        let sc = elastic_donut(9, &params, Physics::elastic_default(), exec).unwrap();
        let loads = random_load(&sc.model, 1);
        let x = DenseBlock::from_fn(sc.model.n_lambda(), 9, |i, j| {
            ((i + 3 * j) % 7) as f64 - 3.0
        });
        g.bench_function(BenchmarkId::new("dual_operator_apply", name), |bch| {
            bch.iter(|| sc.model.dual_operator_apply(&x).unwrap())
        });
        g.bench_function(BenchmarkId::new("solve_multivector", name), |bch| {
            bch.iter(|| {
                solve_multivector(&sc.model, &loads, &sc.map, &SolverOptions::default()).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, dense_kernels, structure);
criterion_main!(benches);
