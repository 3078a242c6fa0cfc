//! `eprsim`: single runs, Monte Carlo sweeps and referee challenges.
//!
//! Exit codes: 0 success, 1 runtime fault, 2 usage error.

mod challenge;
mod envelope;
mod run;
mod sweep;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use epr_sim::ModelSpec;

#[derive(Parser)]
#[command(
    name = "eprsim",
    version,
    about = "Bell and CHSH statistics of the three-angle EPR experiment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one experiment and print its statistics.
    Run(run::RunArgs),
    /// Repeat experiments over several pair counts and report non-violation counts.
    Sweep(sweep::SweepArgs),
    /// Score a hidden-variable contender through the referee protocol.
    Challenge(challenge::ChallengeArgs),
    /// Serve one station of a built-in hidden-variable model.
    #[command(hide = true)]
    Station(challenge::StationArgs),
}

/// Models selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Quantum,
    BellRandom,
    Saturated,
    Cheating,
}

impl ModelArg {
    pub fn spec(self) -> ModelSpec {
        match self {
            ModelArg::Quantum => ModelSpec::Quantum,
            ModelArg::BellRandom => ModelSpec::BellRandom,
            ModelArg::Saturated => ModelSpec::Saturated,
            ModelArg::Cheating => ModelSpec::Cheating,
        }
    }
}

/// A runtime failure that maps to a specific exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn usage(message: impl Into<String>) -> Self {
        Exit {
            code: 2,
            message: message.into(),
        }
    }

    pub fn fault(message: impl Into<String>) -> Self {
        Exit {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<anyhow::Error> for Exit {
    fn from(e: anyhow::Error) -> Self {
        Exit::fault(format!("{e:#}"))
    }
}

impl From<std::io::Error> for Exit {
    fn from(e: std::io::Error) -> Self {
        Exit::fault(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run::execute(args),
        Command::Sweep(args) => sweep::execute(args),
        Command::Challenge(args) => challenge::execute(args),
        Command::Station(args) => challenge::station(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "eprsim: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
