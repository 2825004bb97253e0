use std::path::Path;

use feti_core::harness::*;
use feti_core::solver::Method;

fn field_of(err: ConfigError) -> &'static str {
    match err {
        ConfigError::Invalid { field, .. } => field,
        other => panic!("expected a field error, got {other}"),
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::from_path(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn defaults_fill_missing_fields() {
    let cfg = ExperimentConfig::from_toml_str("problem = \"elastic_donut\"\nn_repetitions = 5\n")
        .unwrap();
    assert_eq!(cfg.tol, 1e-8);
    assert_eq!(cfg.max_iter, 500);
    assert_eq!(cfg.methods, Method::ALL.to_vec());
    assert_eq!(cfg.seed, 1);
    assert_eq!(cfg.material().poisson, 0.49);
    assert_eq!(cfg.geometry().r_outer, 2.5);
}

#[test]
fn invalid_values_name_their_field() {
    let base = "problem = \"thermal_donut\"\n";
    let cases = [
        ("n_repetitions = 2\n", "n_repetitions"),
        ("n_repetitions = 5\ntol = 0.0\n", "tol"),
        ("n_repetitions = 5\nrank_tol = -1e-8\n", "rank_tol"),
        ("n_repetitions = 5\noracle_tol = 0.0\n", "oracle_tol"),
        ("n_repetitions = 5\nmax_iter = 0\n", "max_iter"),
        ("n_repetitions = 5\nmethods = []\n", "methods"),
        (
            "n_repetitions = 5\nmethods = [\"mrhs\", \"mrhs\"]\n",
            "methods",
        ),
        ("n_repetitions = 5\n[material]\npoisson = 0.3\n", "material"),
        ("n_repetitions = 5\n[geometry]\nr_outer = 0.5\n", "geometry"),
    ];
    for (body, field) in cases {
        let err = ExperimentConfig::from_toml_str(&format!("{base}{body}")).unwrap_err();
        assert_eq!(field_of(err), field, "{body}");
    }
    let err = ExperimentConfig::from_toml_str(
        "problem = \"elastic_donut\"\nn_repetitions = 4\n[material]\npoisson = 0.5\n",
    )
    .unwrap_err();
    assert_eq!(field_of(err), "material");
}

#[test]
fn unknown_keys_and_problems_are_parse_errors() {
    for body in [
        "problem = \"thermal_donut\"\nn_repetitions = 5\ncolour = 1\n",
        "problem = \"cube\"\nn_repetitions = 5\n",
    ] {
        assert!(matches!(
            ExperimentConfig::from_toml_str(body),
            Err(ConfigError::Parse(_))
        ));
    }
    assert_eq!(
        "donut_two_stands".parse::<ProblemKind>(),
        Ok(ProblemKind::DonutTwoStands)
    );
    assert!("torus".parse::<ProblemKind>().is_err());
}

#[test]
fn synthetic_experiment_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ProblemKind::SyntheticSpd, 5);
    cfg.synthetic.side_size = 6;
    cfg.output = dir.path().to_path_buf();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.runs.len(), 3);
    assert!(report.oracle_passed());
    assert_eq!(report.exit_code(), 0);
    assert!(report.summary.contains("multivector"));
    let mv = report.run(Method::Multivector).unwrap();
    assert!(mv.record.batches_per_iteration().iter().all(|&b| b == 1));
    assert!(dir.path().join("summary.txt").exists());
}
