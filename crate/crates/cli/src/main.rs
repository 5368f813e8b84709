//! `pileup` — density estimation for pile-up distorted samples.
//!
//! Subcommands: `estimate` fits a density to user data, `simulate` draws
//! synthetic samples, `benchmark` runs replicated MISE studies. Exit codes:
//! 0 success, 1 acceptance-band failure, 2 input error, 3 numeric failure.

mod benchmark;
mod commands;
mod spec;

use clap::{Parser, Subcommand};
use pileup_core::CoreError;

#[derive(Parser)]
#[command(name = "pileup", version, about = "Pile-up corrected density estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a density estimate to a CSV sample.
    Estimate(commands::EstimateArgs),
    /// Draw a synthetic pile-up sample and write it as CSV.
    Simulate(commands::SimulateArgs),
    /// Run a replicated MISE benchmark from a spec.
    Benchmark(commands::BenchmarkArgs),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(args) => commands::run_estimate(&args),
        Command::Simulate(args) => commands::run_simulate(&args),
        Command::Benchmark(args) => commands::run_benchmark(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                CoreError::Input(_) | CoreError::Config(_) => 2,
                CoreError::Domain(_) | CoreError::Numeric(_) => 3,
            };
            std::process::exit(code);
        }
    }
}
