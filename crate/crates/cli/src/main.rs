//! `onreg`: play online regression games, evaluate rate tables, compute
//! sequential complexities and check relaxations from the command line.
//!
//! Exit status is 0 when every check passes, 1 when a bound is violated or a
//! check fails, and 2 on usage or input errors.

mod admissibility;
mod bound;
mod common;
mod complexity;
mod lowerbound;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::Outcome;

#[derive(Debug, Parser)]
#[command(
    name = "onreg",
    version,
    about = "Online regression with square loss: games, bounds and complexities"
)]
struct Cli {
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Response bound B (default 1, or 4 for `lowerbound`).
    #[arg(long = "bound-B", global = true)]
    bound_b: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play games and compare regret with the forecaster's guarantee.
    Run(run::RunArgs),
    /// Tabulate upper, lower, optimistic and chaining rates over horizons.
    Bound(bound::BoundArgs),
    /// Covers, fat-shattering dimension and offset complexity of a class.
    Complexity(complexity::ComplexityArgs),
    /// Play a shattering or block adversary and compare with the lower bound.
    Lowerbound(lowerbound::LowerboundArgs),
    /// Check the admissibility recursion of a relaxation on random histories.
    Admissibility(admissibility::AdmissibilityArgs),
}

pub struct Globals {
    pub seed: u64,
    pub bound_b: Option<f64>,
}

impl Globals {
    fn bound_or(&self, default: f64) -> f64 {
        self.bound_b.unwrap_or(default)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let globals = Globals {
        seed: cli.seed,
        bound_b: cli.bound_b,
    };
    let result = match &cli.command {
        Command::Run(args) => run::execute(args, &globals),
        Command::Bound(args) => bound::execute(args, &globals),
        Command::Complexity(args) => complexity::execute(args, &globals),
        Command::Lowerbound(args) => lowerbound::execute(args, &globals),
        Command::Admissibility(args) => admissibility::execute(args, &globals),
    };
    match result.and_then(|(csv, outcome)| common::emit(cli.out.as_deref(), &csv).map(|()| outcome))
    {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(reason)) => {
            eprintln!("check failed: {reason}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
