use feti_core::decomposition::{ModelBuilder, SideRef};
use feti_core::exec::Execution;
use feti_core::fem::{
    build_donut_pattern_with, periodic_load, random_load, InnerBoundary, LoadCase, Physics,
};
use feti_core::oracle::*;
use feti_core::scenarios::*;

fn small() -> DonutParams {
    DonutParams {
        r_inner: 1.0,
        r_outer: 2.0,
        radial_divs: 5,
        angular_divs: 8,
    }
}

#[test]
fn periodic_loading_gives_cyclic_fields() {
    for sc in [
        thermal_donut(6, &small(), Execution::Sequential).unwrap(),
        elastic_donut(
            5,
            &small(),
            Physics::elastic_default(),
            Execution::Sequential,
        )
        .unwrap(),
    ] {
        let sol = oracle_direct_solve(&sc.model, &periodic_load(&sc.model, 3)).unwrap();
        let first = &sol.per_occurrence[0];
        let scale = first.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for u in &sol.per_occurrence[1..] {
            for (a, b) in u.iter().zip(first) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn hinged_ring_is_nonsingular() {
    let sc = hinged_elastic_donut(
        4,
        &small(),
        Physics::elastic_default(),
        Execution::Sequential,
    )
    .unwrap();
    let loads = random_load(&sc.model, 1);
    let sol = oracle_direct_solve(&sc.model, &loads).unwrap();
    assert!(displacement_norm(&sol.per_occurrence) > 0.0);
}

#[test]
fn free_ring_is_singular() {
    let geom = small().geometry(4);
    let pattern = build_donut_pattern_with(
        &geom,
        Physics::Thermal,
        InnerBoundary::Free,
        Execution::Sequential,
    )
    .unwrap();
    let (a, b) = (pattern.side("a").unwrap(), pattern.side("b").unwrap());
    let mut builder = ModelBuilder::new();
    let p = builder.add_pattern(pattern);
    for s in 0..4 {
        builder.add_occurrence(p, -(s as f64) * geom.sector_angle(), [0.0, 0.0]);
    }
    for s in 0..4 {
        builder
            .connect(
                SideRef {
                    occurrence: s,
                    side: a,
                },
                SideRef {
                    occurrence: (s + 1) % 4,
                    side: b,
                },
            )
            .unwrap();
    }
    let model = builder.build().unwrap();
    let err = oracle_direct_solve(&model, &LoadCase::zeros(&model)).unwrap_err();
    assert!(matches!(err, OracleError::SingularGlobalMatrix { .. }));
}

#[test]
fn merged_dofs_match_the_structure_count() {
    let sc = thermal_donut(6, &small(), Execution::Sequential).unwrap();
    let sys = assemble_global(&sc.model);
    // 6 sectors of 6 x 9 nodes, inner arc clamped, radial edges shared
    assert_eq!(sys.n(), 6 * 5 * 8);
}

#[test]
fn rcm_is_a_permutation_that_narrows_a_path() {
    let n = 12;
    let mut adj = vec![Vec::new(); n];
    // path visited in scrambled labels
    let order = [5, 0, 9, 3, 11, 1, 7, 2, 10, 4, 8, 6];
    for w in order.windows(2) {
        adj[w[0]].push(w[1]);
        adj[w[1]].push(w[0]);
    }
    let perm = reverse_cuthill_mckee(&adj);
    let mut seen = perm.clone();
    seen.sort_unstable();
    assert_eq!(seen, (0..n).collect::<Vec<_>>());
    let bw = order
        .windows(2)
        .map(|w| perm[w[0]].abs_diff(perm[w[1]]))
        .max()
        .unwrap();
    assert_eq!(bw, 1);
}

#[test]
fn load_of_wrong_shape_is_rejected() {
    let sc = thermal_donut(3, &small(), Execution::Sequential).unwrap();
    let mut loads = random_load(&sc.model, 1);
    loads.forces[1].pop();
    assert!(matches!(
        oracle_direct_solve(&sc.model, &loads),
        Err(OracleError::LoadMismatch(_))
    ));
}
