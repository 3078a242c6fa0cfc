use std::fmt::Write as _;
use std::time::Instant;

use clap::{Args, ValueEnum};
use epr_sim::montecarlo::ChshOutcome;
use epr_sim::stats::companion_bell_test;
use epr_sim::{run_trial, TrialResult};
use serde::Serialize;

use crate::envelope::{emit, ReportEnvelope};
use crate::{Exit, ModelArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextOrJson {
    Text,
    Json,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long, value_enum, default_value = "quantum")]
    model: ModelArg,
    /// Photon pairs in the experiment.
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u64).range(1..))]
    pairs: u64,
    #[arg(long, env = "EPRSIM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: TextOrJson,
    /// Fail (exit 1) when CHSH or the anti-correlation audit is undefined.
    #[arg(long)]
    strict: bool,
    /// Also evaluate N₃(E) ≤ N₁(E) + N₂(U).
    #[arg(long)]
    companion: bool,
    /// Include wall-clock duration in JSON output.
    #[arg(long)]
    timing: bool,
}

#[derive(Serialize)]
struct RunConfig {
    model: &'static str,
    pairs: u64,
    seed: u64,
}

#[derive(Serialize)]
struct RunReport<'a> {
    #[serde(flatten)]
    trial: &'a TrialResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    companion: Option<Companion>,
}

#[derive(Serialize)]
struct Companion {
    n3e: u64,
    n1e: u64,
    n2u: u64,
    violated: bool,
}

pub fn anticorr_line(trial: &TrialResult) -> String {
    match trial.anticorr {
        Some(a) if a.is_perfect() => "Anti-correlation at equal angles OK.".into(),
        Some(a) => format!(
            "{:.4}% Anti-correlation only. The model misses anti-correlation at equal angles.",
            a.percent
        ),
        None => "Anti-correlation undefined: no pair measured at equal angles.".into(),
    }
}

pub fn bell_lines(trial: &TrialResult) -> String {
    let b = trial.bell;
    let verdict = if b.violated {
        "Bell's inequality is violated!"
    } else {
        "Bell inequality not violated."
    };
    format!(
        "{{{}, {}, {}}}\nN1(U) <= N2(E) + N3(U) expected classically.\n{verdict}",
        b.n1u, b.n2e, b.n3u
    )
}

pub fn chsh_line(trial: &TrialResult) -> String {
    match trial.chsh {
        ChshOutcome::Computed(c) => {
            let verdict = if c.violated {
                "CHSH inequality is violated!"
            } else {
                "CHSH inequality is not violated."
            };
            format!("{{{:.5}, {verdict}}}", c.s)
        }
        ChshOutcome::Indeterminate { empty_config } => {
            format!("CHSH undefined: no pair measured in configuration d={empty_config}.")
        }
    }
}

pub fn execute(args: RunArgs) -> Result<(), Exit> {
    let started = Instant::now();
    let model = args.model.spec();
    let trial = run_trial(&model, args.pairs, args.seed).map_err(|e| Exit::usage(e.to_string()))?;
    let companion = args.companion.then(|| {
        let (n3e, n1e, n2u, violated) = companion_bell_test(&trial.tally);
        Companion {
            n3e,
            n1e,
            n2u,
            violated,
        }
    });

    let out = match args.format {
        TextOrJson::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "model {} | pairs {} | seed {}",
                model, args.pairs, args.seed
            )
            .unwrap();
            writeln!(s, "{}", anticorr_line(&trial)).unwrap();
            writeln!(s, "{}", bell_lines(&trial)).unwrap();
            writeln!(s, "{}", chsh_line(&trial)).unwrap();
            if let Some(c) = &companion {
                let verdict = if c.violated {
                    "violated"
                } else {
                    "not violated"
                };
                writeln!(
                    s,
                    "{{{}, {}, {}}} N3(E) <= N1(E) + N2(U): {verdict}",
                    c.n3e, c.n1e, c.n2u
                )
                .unwrap();
            }
            s
        }
        TextOrJson::Json => {
            let config = RunConfig {
                model: model.name(),
                pairs: args.pairs,
                seed: args.seed,
            };
            let mut command_line = format!(
                "eprsim run --model {} --pairs {} --seed {} --format json",
                model, args.pairs, args.seed
            );
            if args.companion {
                command_line.push_str(" --companion");
            }
            let report = RunReport {
                trial: &trial,
                companion,
            };
            ReportEnvelope::new(
                command_line,
                &config,
                &report,
                args.timing.then_some(started),
            )
            .to_json()
        }
    };
    emit(&out, None)?;

    let undefined =
        matches!(trial.chsh, ChshOutcome::Indeterminate { .. }) || trial.anticorr.is_none();
    if args.strict && undefined {
        return Err(Exit::fault(
            "statistics undefined for this run (empty angle configuration)",
        ));
    }
    Ok(())
}
