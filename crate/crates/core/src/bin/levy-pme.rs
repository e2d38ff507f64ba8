use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_pme::app::{run, Command, RunOptions, EXIT_USAGE, WORKERS_ENV};

/// Monte Carlo laboratory for the regularized porous medium equation with
/// Lévy noise. The worker count is read from LEVY_PME_WORKERS.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate M paths at the scenario's (eps, lambda)
    Simulate(Common),
    /// Cauchy rate as lambda -> 0 at fixed eps
    LambdaStudy(Common),
    /// Cauchy rate as eps -> 0 at the smallest ladder lambda
    EpsStudy(Common),
    /// Moment bounds along the lambda ladder
    Apriori(Common),
    /// Solver independence and Gronwall stability
    Uniqueness(Common),
    /// Sampled structural inequalities
    Inequalities(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo path count (overrides the scenario)
    #[arg(long)]
    paths: Option<usize>,
    /// time step (overrides the scenario)
    #[arg(long)]
    step: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("cannot start {n} workers: {e}");
                }
            }
            _ => {
                eprintln!("{WORKERS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    let (cmd, c) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::LambdaStudy(c) => (Command::LambdaStudy, c),
        Sub::EpsStudy(c) => (Command::EpsStudy, c),
        Sub::Apriori(c) => (Command::Apriori, c),
        Sub::Uniqueness(c) => (Command::Uniqueness, c),
        Sub::Inequalities(c) => (Command::Inequalities, c),
    };
    let outcome = run(
        cmd,
        &RunOptions {
            scenario: c.scenario,
            seed: c.seed,
            out: c.out,
            paths: c.paths,
            step: c.step,
        },
    );
    if outcome.exit_code == 0 {
        println!("{}", outcome.message);
    } else {
        eprintln!("{}", outcome.message);
    }
    ExitCode::from(outcome.exit_code as u8)
}
