//! Experiment driver behind the `feti solve` command: TOML configuration,
//! engine runs, per-method convergence CSV, summary table and oracle check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::Preconditioner;
use crate::exec::Execution;
use crate::fem::{random_load, LoadCase, Physics, Spectrum};
use crate::linalg::norm;
use crate::oracle::{displacement_norm, oracle_direct_solve, relative_error, OracleError};
use crate::scenarios::{
    donut_material, donut_one_stand, donut_two_stands, elastic_donut, hinged_elastic_donut,
    synthetic_one_stand, synthetic_periodic, thermal_donut, DonutParams, Scenario, ScenarioError,
    StandParams,
};
use crate::solver::{
    solve_classical, solve_classical_mrhs, solve_multivector, ConvergenceRecord, Method, Solution,
    SolveError, SolverOptions,
};

pub const CSV_HEADER: [&str; 5] = [
    "iter",
    "residual_norm",
    "active_directions",
    "cum_local_solve_batches",
    "wall_ms",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ConfigError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot build the structure: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("output {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Oracle(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    ThermalDonut,
    ElasticDonut,
    DonutOneStand,
    DonutTwoStands,
    HingedElasticDonut,
    SyntheticSpd,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::ThermalDonut => "thermal_donut",
            ProblemKind::ElasticDonut => "elastic_donut",
            ProblemKind::DonutOneStand => "donut_one_stand",
            ProblemKind::DonutTwoStands => "donut_two_stands",
            ProblemKind::HingedElasticDonut => "hinged_elastic_donut",
            ProblemKind::SyntheticSpd => "synthetic_spd",
        }
    }

    pub fn is_donut(self) -> bool {
        self != ProblemKind::SyntheticSpd
    }

    pub fn is_elastic(self) -> bool {
        !matches!(self, ProblemKind::ThermalDonut | ProblemKind::SyntheticSpd)
    }

    pub fn default_geometry(self) -> DonutParams {
        match self {
            ProblemKind::ThermalDonut | ProblemKind::SyntheticSpd => DonutParams::default(),
            ProblemKind::HingedElasticDonut => DonutParams::hinged_default(),
            _ => DonutParams::elastic_default(),
        }
    }

    pub fn default_material(self) -> Material {
        match self {
            ProblemKind::HingedElasticDonut => Material::default(),
            _ => match donut_material() {
                Physics::PlaneStrain { young, poisson } => Material { young, poisson },
                Physics::Thermal => Material::default(),
            },
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemKind::deserialize(
            serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s),
        )
        .map_err(|_| format!("unknown problem '{s}'"))
    }
}

/// Plane-strain constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            young: 1.0,
            poisson: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Dofs per side.
    pub side_size: usize,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    /// Seed of the random pattern matrix; defaults to the load seed.
    pub matrix_seed: Option<u64>,
    /// 0 for the periodic chain, 1 for a stand glued to the last repetition.
    pub stands: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let s = Spectrum::default();
        SyntheticConfig {
            side_size: 20,
            spectrum_min: s.min,
            spectrum_max: s.max,
            matrix_seed: None,
            stands: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub n_repetitions: usize,
    /// Donut discretization; the problem's default when absent.
    #[serde(default)]
    pub geometry: Option<DonutParams>,
    #[serde(default)]
    pub material: Option<Material>,
    #[serde(default)]
    pub stand: StandParams,
    #[serde(default)]
    pub synthetic: SyntheticConfig,
    /// Seed of the random load.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub preconditioner: Preconditioner,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default)]
    pub reorthogonalize: Option<bool>,
    /// Relative displacement error accepted against the direct solve.
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_seed() -> u64 {
    1
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    500
}

fn default_rank_tol() -> f64 {
    crate::linalg::DEFAULT_RANK_TOL
}

fn default_oracle_tol() -> f64 {
    1e-6
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    /// Config with every optional field at its default.
    pub fn new(problem: ProblemKind, n_repetitions: usize) -> Self {
        ExperimentConfig {
            problem,
            n_repetitions,
            geometry: None,
            material: None,
            stand: StandParams::default(),
            synthetic: SyntheticConfig::default(),
            seed: default_seed(),
            methods: default_methods(),
            preconditioner: Preconditioner::default(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            rank_tol: default_rank_tol(),
            reorthogonalize: None,
            oracle_tol: default_oracle_tol(),
            execution: Execution::default(),
            output: default_output(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn geometry(&self) -> DonutParams {
        self.geometry
            .unwrap_or_else(|| self.problem.default_geometry())
    }

    pub fn material(&self) -> Material {
        self.material
            .unwrap_or_else(|| self.problem.default_material())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            precond: self.preconditioner,
            tol: self.tol,
            max_iter: self.max_iter,
            rank_tol: self.rank_tol,
            reorthogonalize: self.reorthogonalize,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let min_reps = if self.problem.is_donut() { 3 } else { 2 };
        if self.n_repetitions < min_reps {
            return Err(ConfigError::invalid(
                "n_repetitions",
                format!(
                    "{} needs at least {min_reps}, got {}",
                    self.problem.name(),
                    self.n_repetitions
                ),
            ));
        }
        for (field, v) in [
            ("tol", self.tol),
            ("rank_tol", self.rank_tol),
            ("oracle_tol", self.oracle_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(
                    field,
                    format!("must be a positive number, got {v}"),
                ));
            }
        }
        if self.max_iter == 0 {
            return Err(ConfigError::invalid("max_iter", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::invalid("methods", "list is empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(ConfigError::invalid("methods", format!("{m} listed twice")));
            }
        }
        if self.problem.is_donut() {
            let g = self.geometry();
            if !(g.r_inner > 0.0 && g.r_outer > g.r_inner && g.r_outer.is_finite()) {
                return Err(ConfigError::invalid(
                    "geometry",
                    format!(
                        "need 0 < r_inner < r_outer, got {} and {}",
                        g.r_inner, g.r_outer
                    ),
                ));
            }
            if g.radial_divs == 0 || g.angular_divs < 2 {
                return Err(ConfigError::invalid(
                    "geometry",
                    "need radial_divs >= 1 and angular_divs >= 2",
                ));
            }
        } else if self.geometry.is_some() {
            return Err(ConfigError::invalid(
                "geometry",
                "not used by synthetic_spd",
            ));
        }
        if self.problem.is_elastic() {
            let m = self.material();
            if !(m.young > 0.0 && m.young.is_finite()) {
                return Err(ConfigError::invalid(
                    "material",
                    format!("young must be > 0, got {}", m.young),
                ));
            }
            if !(0.0..0.5).contains(&m.poisson) {
                return Err(ConfigError::invalid(
                    "material",
                    format!("poisson must lie in [0, 0.5), got {}", m.poisson),
                ));
            }
        } else if self.material.is_some() {
            return Err(ConfigError::invalid(
                "material",
                format!("not used by {}", self.problem.name()),
            ));
        }
        if matches!(
            self.problem,
            ProblemKind::DonutOneStand | ProblemKind::DonutTwoStands
        ) {
            let s = &self.stand;
            if !(s.height > 0.0) || s.width_divs == 0 || s.height_divs == 0 {
                return Err(ConfigError::invalid(
                    "stand",
                    "height and divisions must be positive",
                ));
            }
            if s.attach_start + s.width_divs > self.geometry().angular_divs {
                return Err(ConfigError::invalid(
                    "stand",
                    "attach_start + width_divs exceeds angular_divs",
                ));
            }
        }
        if self.problem == ProblemKind::SyntheticSpd {
            let s = &self.synthetic;
            if s.side_size == 0 {
                return Err(ConfigError::invalid(
                    "synthetic",
                    "side_size must be at least 1",
                ));
            }
            if !(s.spectrum_min > 0.0
                && s.spectrum_min <= s.spectrum_max
                && s.spectrum_max.is_finite())
            {
                return Err(ConfigError::invalid(
                    "synthetic",
                    "need 0 < spectrum_min <= spectrum_max",
                ));
            }
            if s.stands > 1 {
                return Err(ConfigError::invalid("synthetic", "stands must be 0 or 1"));
            }
        }
        Ok(())
    }

    /// Builds the structure and its multivector map.
    pub fn build_scenario(&self) -> Result<Scenario, ScenarioError> {
        let n = self.n_repetitions;
        let geom = self.geometry();
        let m = self.material();
        let physics = Physics::PlaneStrain {
            young: m.young,
            poisson: m.poisson,
        };
        let exec = self.execution;
        match self.problem {
            ProblemKind::ThermalDonut => thermal_donut(n, &geom, exec),
            ProblemKind::ElasticDonut => elastic_donut(n, &geom, physics, exec),
            ProblemKind::HingedElasticDonut => hinged_elastic_donut(n, &geom, physics, exec),
            ProblemKind::DonutOneStand => donut_one_stand(n, &geom, &self.stand, physics, exec),
            ProblemKind::DonutTwoStands => donut_two_stands(n, &geom, &self.stand, physics, exec),
            ProblemKind::SyntheticSpd => {
                let s = &self.synthetic;
                let spectrum = Spectrum {
                    min: s.spectrum_min,
                    max: s.spectrum_max,
                };
                let seed = s.matrix_seed.unwrap_or(self.seed);
                let mut sc = if s.stands == 1 {
                    synthetic_one_stand(n, s.side_size, spectrum, seed)?
                } else {
                    synthetic_periodic(n, s.side_size, spectrum, seed)?
                };
                sc.model.set_execution(exec);
                Ok(sc)
            }
        }
    }
}

/// Runs one engine on a scenario.
pub fn run_method(
    method: Method,
    sc: &Scenario,
    loads: &LoadCase,
    opts: &SolverOptions,
) -> Result<Solution, SolveError> {
    match method {
        Method::Classical => solve_classical(&sc.model, loads, opts),
        Method::Mrhs => solve_classical_mrhs(&sc.model, loads, opts),
        Method::Multivector => solve_multivector(&sc.model, loads, &sc.map, opts),
    }
}

/// Outcome of one engine.
#[derive(Clone, Debug)]
pub struct MethodRun {
    pub method: Method,
    pub record: ConvergenceRecord,
    pub converged: bool,
    /// Solver failure other than convergence, if any.
    pub error: Option<String>,
    pub oracle_error: Option<f64>,
    /// `‖Σ B t u‖ / ‖u‖`
    pub relative_jump: Option<f64>,
    pub csv: PathBuf,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub problem: ProblemKind,
    pub n_repetitions: usize,
    pub n_patterns: usize,
    pub n_lambda: usize,
    pub runs: Vec<MethodRun>,
    pub oracle_tol: f64,
    pub jump_tol: f64,
    pub summary: String,
}

impl ExperimentReport {
    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.converged)
    }

    /// Every converged run matches the direct solve.
    pub fn oracle_passed(&self) -> bool {
        self.runs
            .iter()
            .filter(|r| r.converged)
            .all(|r| r.oracle_error.is_some_and(|e| e <= self.oracle_tol))
    }

    /// Every converged run has `‖Σ B t u‖ <= 10 tol ‖u‖`.
    pub fn jump_within_limit(&self) -> bool {
        self.runs
            .iter()
            .filter(|r| r.converged)
            .all(|r| r.relative_jump.is_some_and(|j| j <= self.jump_tol))
    }

    pub fn max_oracle_error(&self) -> f64 {
        self.runs
            .iter()
            .filter_map(|r| r.oracle_error)
            .fold(0.0, f64::max)
    }

    /// 0 converged and verified, 2 non-convergence, 3 oracle failure.
    pub fn exit_code(&self) -> i32 {
        if !self.oracle_passed() {
            3
        } else if !self.all_converged() {
            2
        } else {
            0
        }
    }

    pub fn run(&self, m: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == m)
    }
}

/// Writes the history of one run as CSV.
pub fn write_history_csv(path: &Path, record: &ConvergenceRecord) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for j in 0..record.residual_norms.len() {
        w.write_record([
            j.to_string(),
            format!("{:.17e}", record.residual_norms[j]),
            record.active_directions[j].to_string(),
            record.cum_local_solve_batches[j].to_string(),
            format!("{:.3}", record.wall_ms[j]),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

/// Builds the structure, runs every configured engine, writes one CSV per
/// engine plus `summary.txt` into the output directory, and checks the
/// converged runs against the direct solve.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let sc = cfg.build_scenario()?;
    let loads = random_load(&sc.model, cfg.seed);
    let opts = cfg.solver_options();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    fs::create_dir_all(&cfg.output).map_err(io(&cfg.output))?;

    let mut runs = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let (sol, converged, error) = match run_method(method, &sc, &loads, &opts) {
            Ok(s) => (Some(s), true, None),
            Err(SolveError::MaxIterationsExceeded { partial, .. }) => (Some(*partial), false, None),
            Err(e) => (None, false, Some(e.to_string())),
        };
        let record = sol.as_ref().map(|s| s.record.clone()).unwrap_or_default();
        let csv = cfg.output.join(format!("{}.csv", method.name()));
        write_history_csv(&csv, &record)?;
        let relative_jump = match &sol {
            Some(s) if converged => {
                let jump = norm(&sc.model.interface_jump(&s.u).map_err(ScenarioError::from)?);
                let un = displacement_norm(&s.u);
                Some(if un > 0.0 { jump / un } else { jump })
            }
            _ => None,
        };
        runs.push((
            MethodRun {
                method,
                record,
                converged,
                error,
                oracle_error: None,
                relative_jump,
                csv,
            },
            sol,
        ));
    }

    if runs.iter().any(|(r, _)| r.converged) {
        let oracle = oracle_direct_solve(&sc.model, &loads)?;
        for (r, sol) in runs.iter_mut() {
            if let (true, Some(s)) = (r.converged, sol) {
                r.oracle_error = Some(relative_error(&s.u, &oracle.per_occurrence));
            }
        }
    }

    let mut report = ExperimentReport {
        problem: cfg.problem,
        n_repetitions: cfg.n_repetitions,
        n_patterns: sc.model.n_patterns(),
        n_lambda: sc.model.n_lambda(),
        runs: runs.into_iter().map(|(r, _)| r).collect(),
        oracle_tol: cfg.oracle_tol,
        jump_tol: 10.0 * cfg.tol,
        summary: String::new(),
    };
    report.summary = summary_table(&report);
    let path = cfg.output.join("summary.txt");
    fs::write(&path, &report.summary).map_err(io(&path))?;
    Ok(report)
}

/// Methods as rows, iterations and wall time as columns.
pub fn summary_table(report: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} with {} repetitions ({} pattern{}, {} interface multipliers)",
        report.problem.name(),
        report.n_repetitions,
        report.n_patterns,
        if report.n_patterns == 1 { "" } else { "s" },
        report.n_lambda
    );
    let _ = writeln!(
        s,
        "{:<12} {:>10} {:>10} {:>13} {:>12} {:>14} {:>12}",
        "method", "iterations", "converged", "batches/iter", "wall ms", "oracle error", "jump/|u|"
    );
    for r in &report.runs {
        let per_iter = r.record.batches_per_iteration();
        let batches = match (
            per_iter.first(),
            per_iter.iter().all(|b| Some(b) == per_iter.first()),
        ) {
            (Some(b), true) => b.to_string(),
            (Some(_), false) => "varies".into(),
            (None, _) => "-".into(),
        };
        let wall = r
            .record
            .wall_ms
            .last()
            .map_or("-".into(), |w| format!("{w:.1}"));
        let err = r.oracle_error.map_or("-".into(), |e| format!("{e:.2e}"));
        let jump = r.relative_jump.map_or("-".into(), |j| format!("{j:.2e}"));
        let conv = match (&r.error, r.converged) {
            (Some(_), _) => "error",
            (None, true) => "yes",
            (None, false) => "no",
        };
        let _ = writeln!(
            s,
            "{:<12} {:>10} {:>10} {:>13} {:>12} {:>14} {:>12}",
            r.method.name(),
            r.record.iterations,
            conv,
            batches,
            wall,
            err,
            jump
        );
        if let Some(e) = &r.error {
            let _ = writeln!(s, "  {}: {e}", r.method.name());
        }
    }
    let verdict = if report.oracle_passed() {
        "pass"
    } else {
        "FAIL"
    };
    let _ = writeln!(
        s,
        "oracle: {verdict} (max relative error {:.2e}, limit {:.0e})",
        report.max_oracle_error(),
        report.oracle_tol
    );
    let within = if report.jump_within_limit() {
        "within"
    } else {
        "above"
    };
    let _ = writeln!(
        s,
        "interface jump: {within} 10 tol |u| = {:.0e} |u|",
        report.jump_tol
    );
    s
}
