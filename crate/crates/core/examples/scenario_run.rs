//! Drives the same code path as the command-line tool: load a scenario,
//! run a subcommand, and list the artifacts written.
//!
//! Usage: `cargo run --example scenario_run -- [scenario.toml] [subcommand]`

use std::path::PathBuf;

use levy_pme::app::{run, Command, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let scenario = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/deterministic.toml")));
    let cmd = match args.next().as_deref().unwrap_or("simulate") {
        "simulate" => Command::Simulate,
        "lambda-study" => Command::LambdaStudy,
        "eps-study" => Command::EpsStudy,
        "apriori" => Command::Apriori,
        "uniqueness" => Command::Uniqueness,
        "inequalities" => Command::Inequalities,
        other => {
            eprintln!("unknown subcommand {other}");
            std::process::exit(2);
        }
    };
    let out = std::env::temp_dir().join(format!("levy-pme-{}", cmd.name()));
    let outcome = run(
        cmd,
        &RunOptions {
            scenario,
            seed: 1,
            out: out.clone(),
            paths: None,
            step: None,
        },
    );
    println!("{} (exit {})", outcome.message, outcome.exit_code);
    if let Ok(entries) = std::fs::read_dir(&out) {
        for e in entries.flatten() {
            println!("  {}", e.path().display());
        }
    }
    std::process::exit(outcome.exit_code);
}
