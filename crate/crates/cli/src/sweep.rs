use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use epr_sim::montecarlo::{REFERENCE_PAIRS, REFERENCE_TRIALS};
use epr_sim::report::{plot_csv, sweep_csv};
use epr_sim::{sweep, SweepOptions, SweepReport};
use serde::Serialize;

use crate::envelope::{emit, ReportEnvelope};
use crate::{Exit, ModelArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFormat {
    Csv,
    Json,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Model to sweep; repeatable. Defaults to quantum.
    #[arg(long = "model", value_enum)]
    models: Vec<ModelArg>,
    /// Comma-separated pair counts.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pairs: Vec<u64>,
    #[arg(long, default_value_t = REFERENCE_TRIALS, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, env = "EPRSIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads; the report does not depend on this.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: SweepFormat,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write (log2 pairs, non-violation count) series as CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Quantum and bell-random at 40..800 pairs, 1000 trials each.
    #[arg(long)]
    fig1: bool,
    /// Include wall-clock duration in JSON output.
    #[arg(long)]
    timing: bool,
}

#[derive(Serialize)]
struct SweepConfig {
    models: Vec<&'static str>,
    pairs: Vec<u64>,
    trials: u64,
    seed: u64,
}

pub fn execute(mut args: SweepArgs) -> Result<(), Exit> {
    let started = Instant::now();
    if args.fig1 {
        if args.models.is_empty() {
            args.models = vec![ModelArg::Quantum, ModelArg::BellRandom];
        }
        if args.pairs.is_empty() {
            args.pairs = REFERENCE_PAIRS.to_vec();
        }
    }
    if args.models.is_empty() {
        args.models.push(ModelArg::Quantum);
    }
    if args.pairs.is_empty() {
        return Err(Exit::usage("--pairs is required (or use --fig1)"));
    }
    let opts = SweepOptions {
        workers: args.workers as usize,
    };
    let reports = args
        .models
        .iter()
        .map(|m| sweep(&m.spec(), &args.pairs, args.trials, args.seed, opts))
        .collect::<Result<Vec<SweepReport>, _>>()
        .map_err(|e| Exit::usage(e.to_string()))?;

    let text = match args.format {
        SweepFormat::Csv => sweep_csv(&reports),
        SweepFormat::Json => {
            let config = SweepConfig {
                models: args.models.iter().map(|m| m.spec().name()).collect(),
                pairs: args.pairs.clone(),
                trials: args.trials,
                seed: args.seed,
            };
            let models: String = args
                .models
                .iter()
                .map(|m| format!(" --model {}", m.spec().name()))
                .collect();
            let pairs: Vec<String> = args.pairs.iter().map(u64::to_string).collect();
            let command_line = format!(
                "eprsim sweep{models} --pairs {} --trials {} --seed {} --format json",
                pairs.join(","),
                args.trials,
                args.seed
            );
            ReportEnvelope::new(
                command_line,
                &config,
                &reports,
                args.timing.then_some(started),
            )
            .to_json()
        }
    };
    emit(&text, args.out.as_deref())?;
    if let Some(plot) = &args.plot {
        emit(&plot_csv(&reports), Some(plot))?;
    }
    Ok(())
}
