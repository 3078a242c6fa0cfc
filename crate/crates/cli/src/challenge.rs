use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use epr_sim::referee::{
    referee_session, serve_station, Endpoints, Fault, Misbehavior, Role, SessionConfig,
    SessionScore, StationConfig,
};
use epr_sim::HvModel;
use serde::Serialize;

use crate::envelope::{emit, ReportEnvelope};
use crate::run::TextOrJson;
use crate::{Exit, ModelArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MisbehaveArg {
    None,
    OutcomeInsteadOfAck,
    OutcomeAfterAck,
}

impl From<MisbehaveArg> for Misbehavior {
    fn from(m: MisbehaveArg) -> Self {
        match m {
            MisbehaveArg::None => Misbehavior::None,
            MisbehaveArg::OutcomeInsteadOfAck => Misbehavior::OutcomeInsteadOfAck,
            MisbehaveArg::OutcomeAfterAck => Misbehavior::OutcomeAfterAck,
        }
    }
}

fn parse_endpoint(s: &str) -> Result<(Role, String), String> {
    let (role, addr) = s
        .split_once('=')
        .ok_or_else(|| format!("expected ROLE=HOST:PORT, got `{s}`"))?;
    Ok((role.parse()?, addr.to_string()))
}

fn parse_station_fault(s: &str) -> Result<(Role, MisbehaveArg), String> {
    let (role, kind) = s
        .split_once(':')
        .ok_or_else(|| format!("expected ROLE:BEHAVIOR, got `{s}`"))?;
    Ok((role.parse()?, MisbehaveArg::from_str(kind, true)?))
}

#[derive(Args)]
pub struct ChallengeArgs {
    /// Run a built-in hidden-variable model as three station processes.
    #[arg(
        long,
        value_enum,
        conflicts_with = "endpoints",
        required_unless_present = "endpoints"
    )]
    builtin: Option<ModelArg>,
    /// Contender station address, as ROLE=HOST:PORT with ROLE one of source, alice, bob.
    #[arg(long = "endpoint", value_parser = parse_endpoint)]
    endpoints: Vec<(Role, String)>,
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u64).range(1..))]
    pairs: u64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    /// Seeds the referee's angle draws (and the built-in source).
    #[arg(long, env = "EPRSIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Per-message timeout in milliseconds.
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    timeout_ms: u64,
    /// Write the full message transcript (JSON lines) here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: TextOrJson,
    #[arg(long)]
    timing: bool,
    /// Make one built-in station break the protocol, as ROLE:BEHAVIOR.
    #[arg(long, hide = true, value_parser = parse_station_fault)]
    misbehave: Option<(Role, MisbehaveArg)>,
}

#[derive(Args)]
pub struct StationArgs {
    #[arg(long, value_parser = |s: &str| s.parse::<Role>())]
    role: Role,
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "127.0.0.1:0")]
    listen: String,
    #[arg(long, value_enum, default_value = "none")]
    misbehave: MisbehaveArg,
}

fn hv_model(model: ModelArg) -> Result<HvModel, Exit> {
    HvModel::try_from(model.spec()).map_err(|e| Exit::usage(e.to_string()))
}

/// Serves one station; prints `listening <addr>` once bound.
pub fn station(args: StationArgs) -> Result<(), Exit> {
    let model = hv_model(args.model)?;
    let listener = TcpListener::bind(&args.listen)?;
    {
        let mut out = std::io::stdout().lock();
        writeln!(out, "listening {}", listener.local_addr()?)?;
        out.flush()?;
    }
    let cfg = StationConfig {
        role: args.role,
        model,
        seed: args.seed,
        misbehavior: args.misbehave.into(),
    };
    serve_station(listener, cfg).map_err(|e| Exit::fault(format!("{} station: {e}", args.role)))
}

struct StationProcs(Vec<Child>);

impl StationProcs {
    fn spawn(
        model: ModelArg,
        seed: u64,
        misbehave: Option<(Role, MisbehaveArg)>,
    ) -> Result<(Self, Endpoints), Exit> {
        let exe = std::env::current_exe()?;
        let mut procs = StationProcs(Vec::new());
        let mut addrs = Vec::new();
        for role in Role::ALL {
            let behavior = match misbehave {
                Some((r, b)) if r == role => b,
                _ => MisbehaveArg::None,
            };
            let behavior = behavior.to_possible_value().expect("not skipped");
            let model_name = model.to_possible_value().expect("not skipped");
            let mut child = Command::new(&exe)
                .args([
                    "station",
                    "--role",
                    role.name(),
                    "--model",
                    model_name.get_name(),
                ])
                .args(["--seed", &seed.to_string(), "--listen", "127.0.0.1:0"])
                .args(["--misbehave", behavior.get_name()])
                .stdin(Stdio::null())
                .stdout(Stdio::piped())
                .spawn()?;
            let stdout = child.stdout.take().expect("piped stdout");
            procs.0.push(child);
            let mut line = String::new();
            BufReader::new(stdout).read_line(&mut line)?;
            let addr = line.trim().strip_prefix("listening ").ok_or_else(|| {
                Exit::fault(format!("{role} station did not start: `{}`", line.trim()))
            })?;
            addrs.push(addr.to_string());
        }
        let endpoints = Endpoints {
            source: addrs[0].clone(),
            alice: addrs[1].clone(),
            bob: addrs[2].clone(),
        };
        Ok((procs, endpoints))
    }

    fn finish(mut self, ok: bool) {
        for c in &mut self.0 {
            if !ok {
                let _ = c.kill();
            }
            let _ = c.wait();
        }
        self.0.clear();
    }
}

impl Drop for StationProcs {
    fn drop(&mut self) {
        for c in &mut self.0 {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

#[derive(Serialize)]
struct ChallengeConfig<'a> {
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    endpoints: Option<&'a Endpoints>,
    pairs: u64,
    runs: u64,
    seed: u64,
    timeout_ms: u64,
}

fn external_endpoints(list: &[(Role, String)]) -> Result<Endpoints, Exit> {
    let find = |role: Role| -> Result<String, Exit> {
        let mut matches = list.iter().filter(|(r, _)| *r == role);
        match (matches.next(), matches.next()) {
            (Some((_, a)), None) => Ok(a.clone()),
            (None, _) => Err(Exit::usage(format!("missing --endpoint {role}=HOST:PORT"))),
            (Some(_), Some(_)) => Err(Exit::usage(format!("--endpoint {role} given twice"))),
        }
    };
    Ok(Endpoints {
        source: find(Role::Source)?,
        alice: find(Role::Alice)?,
        bob: find(Role::Bob)?,
    })
}

fn render_text(score: &SessionScore, header: &str) -> String {
    let s = &score.summary;
    let mut out = String::new();
    writeln!(out, "{header}").unwrap();
    writeln!(
        out,
        "Bell violation rate: {:.4} ({} of {} runs)",
        score.bell_violation_rate,
        s.trials - s.bell_obeyed,
        s.trials
    )
    .unwrap();
    writeln!(
        out,
        "CHSH violation rate: {:.4} ({} indeterminate)",
        score.chsh_violation_rate, s.chsh_indeterminate
    )
    .unwrap();
    match score.mean_anticorr_pct {
        Some(p) => writeln!(
            out,
            "Mean anti-correlation: {p:.4}% (perfect in {} of {} runs)",
            score.anticorr_perfect_runs, s.trials
        )
        .unwrap(),
        None => writeln!(out, "Mean anti-correlation: undefined").unwrap(),
    }
    if let Some(m) = s.mean_s {
        writeln!(out, "Mean S: {m:.5}").unwrap();
    }
    writeln!(out, "Verdict: {}", score.verdict.text()).unwrap();
    out
}

fn report_fault(fault: &Fault) -> Exit {
    let mut msg = fault.to_string();
    if !fault.transcript.is_empty() {
        msg.push_str("\nlast messages:");
        for e in &fault.transcript {
            let line = serde_json::to_string(e).expect("transcript entry serializes");
            msg.push_str("\n  ");
            msg.push_str(&line);
        }
    }
    Exit::fault(msg)
}

pub fn execute(args: ChallengeArgs) -> Result<(), Exit> {
    let started = Instant::now();
    let (procs, endpoints, model) = match args.builtin {
        Some(m) => {
            hv_model(m)?;
            let (procs, endpoints) = StationProcs::spawn(m, args.seed, args.misbehave)?;
            (Some(procs), endpoints, Some(m.spec().name()))
        }
        None => (None, external_endpoints(&args.endpoints)?, None),
    };
    let mut cfg = SessionConfig::new(args.pairs, args.runs, args.seed, endpoints);
    cfg.timeout = Duration::from_millis(args.timeout_ms);

    let sink: Option<Box<dyn Write + Send>> = match &args.transcript {
        Some(p) => Some(Box::new(BufWriter::new(File::create(p)?))),
        None => None,
    };
    let outcome = referee_session(&cfg, sink);
    if let Some(p) = procs {
        p.finish(outcome.is_ok());
    }
    let score = outcome.map_err(|f| report_fault(&f))?;

    let header = match model {
        Some(m) => format!(
            "challenge: built-in {m} | pairs {} | runs {} | seed {}",
            args.pairs, args.runs, args.seed
        ),
        None => format!(
            "challenge: external contender | pairs {} | runs {} | seed {}",
            args.pairs, args.runs, args.seed
        ),
    };
    let text = match args.format {
        TextOrJson::Text => render_text(&score, &header),
        TextOrJson::Json => {
            let external = model.is_none().then_some(&cfg.endpoints);
            let config = ChallengeConfig {
                mode: if model.is_some() {
                    "builtin"
                } else {
                    "external"
                },
                model,
                endpoints: external,
                pairs: args.pairs,
                runs: args.runs,
                seed: args.seed,
                timeout_ms: args.timeout_ms,
            };
            let target = match (model, external) {
                (Some(m), _) => format!("--builtin {m}"),
                (None, Some(e)) => format!(
                    "--endpoint source={} --endpoint alice={} --endpoint bob={}",
                    e.source, e.alice, e.bob
                ),
                (None, None) => unreachable!(),
            };
            let command_line = format!(
                "eprsim challenge {target} --pairs {} --runs {} --seed {} --timeout-ms {} --format json",
                args.pairs, args.runs, args.seed, args.timeout_ms
            );
            ReportEnvelope::new(
                command_line,
                &config,
                &score,
                args.timing.then_some(started),
            )
            .to_json()
        }
    };
    emit(&text, None)?;
    Ok(())
}
