use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feti_core::harness::{run_experiment, ExperimentConfig};
use feti_core::solver::Method;

#[derive(Parser, Debug)]
#[command(
    name = "feti",
    version,
    about = "FETI experiments on structures made of repeated patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the engines on one configured structure and check them against a direct solve.
    Solve {
        /// TOML experiment description.
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated engines (classical, mrhs, multivector).
        #[arg(long, value_delimiter = ',')]
        method: Option<Vec<Method>>,
        /// Relative residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Seed of the random load.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for CSV histories and the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // bad arguments are configuration errors; 2 is reserved for non-convergence
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Command::Solve {
        config,
        method,
        tol,
        seed,
        out,
    } = cli.command;
    let mut cfg = match ExperimentConfig::from_path(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(m) = method {
        cfg.methods = m;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run_experiment(&cfg) {
        Ok(report) => {
            print!("{}", report.summary);
            for r in &report.runs {
                println!("{}: {}", r.method, r.csv.display());
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
