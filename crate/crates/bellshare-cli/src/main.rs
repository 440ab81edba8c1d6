//! Scenario-driven command line for the bilateral CHSH sharing simulator.
//!
//! Exit codes: 0 = all checks passed, 1 = a required check failed,
//! 2 = input error (bad flags, malformed or invalid scenario, I/O),
//! 3 = the classical bound was beaten — investigate.

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::scenario::{Scenario, ScenarioFile};

#[derive(Parser, Debug)]
#[command(
    name = "bellshare",
    version,
    about = "Simulate and verify CHSH nonlocality sharing under bilateral sequential measurements"
)]
struct Cli {
    /// Path to the JSON scenario file (mode, d, schmidt, ...).
    #[arg(long)]
    scenario: PathBuf,

    /// Where to write the report; overrides the scenario's own "output"
    /// field. Stdout when neither is given.
    #[arg(long)]
    output: Option<PathBuf>,

    /// Seed for the optimizer's restart generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Worker threads for sweep evaluation. The BELLSHARE_WORKERS
    /// environment variable overrides this flag when set.
    #[arg(long)]
    workers: Option<usize>,

    /// Lower clamp for theta in optimize mode (the domain is open at 0).
    #[arg(long = "theta-min", default_value_t = 1e-6)]
    theta_min: f64,
}

/// Report body plus exit code, or (exit code, message) on failure.
type CommandOutcome = Result<(String, u8), (u8, String)>;

fn resolve_workers(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("BELLSHARE_WORKERS") {
        Ok(value) => value
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("BELLSHARE_WORKERS is not a thread count: {value:?}")),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(format!("BELLSHARE_WORKERS is unreadable: {e}")),
    }
}

fn run(cli: Cli) -> u8 {
    let text = match std::fs::read_to_string(&cli.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.scenario.display());
            return 2;
        }
    };
    let parsed = match ScenarioFile::parse(&text).and_then(ScenarioFile::validate) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let workers = match resolve_workers(cli.workers) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    let run_scenario = || -> (Option<String>, CommandOutcome) {
        match parsed {
            Scenario::Verify {
                d,
                ref schmidt_list,
                ref thetas,
                ref gammas,
                ref output,
            } => (
                output.clone(),
                Ok(commands::cmd_verify(d, schmidt_list, thetas, gammas)),
            ),
            Scenario::Sweep {
                d,
                ref schmidt_list,
                ref thetas,
                ref gammas,
                ref output,
            } => (
                output.clone(),
                commands::cmd_sweep(d, schmidt_list.clone(), thetas.clone(), gammas.clone()),
            ),
            Scenario::Optimize {
                d,
                ref schmidt,
                restarts,
                budget,
                ref output,
            } => (
                output.clone(),
                commands::cmd_optimize(d, schmidt, restarts, budget, cli.seed, cli.theta_min),
            ),
        }
    };

    // Sweeps fan out over rayon; honor the requested worker count by running
    // the whole command inside a dedicated pool.
    let (scenario_output, outcome) = match workers {
        Some(n) if n >= 1 => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: cannot build worker pool: {e}");
                    return 2;
                }
            };
            pool.install(run_scenario)
        }
        Some(_) => {
            eprintln!("error: worker count must be >= 1");
            return 2;
        }
        None => run_scenario(),
    };

    let (body, code) = match outcome {
        Ok(pair) => pair,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };

    let target = cli
        .output
        .or(scenario_output.map(PathBuf::from));
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{body}"),
    }
    code
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
