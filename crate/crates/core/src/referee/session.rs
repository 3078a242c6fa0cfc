//! The referee's per-pair state machine.

use std::fmt;
use std::io::Write;
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::conn::{Conn, RecvError};
use super::protocol::{Kind, Message, Role, PROTOCOL_VERSION};
use super::transcript::{Direction, Transcript, TranscriptEntry};
use crate::montecarlo::{SweepRow, TrialResult};
use crate::quantum::draw_setting;
use crate::rng::{pair_stream, trial_seed, Channel};
use crate::setting::{Bit, PairRecord};
use crate::stats::Tally;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Bell violation rate a contender must reach to be called quantum-like.
pub const QUANTUM_LIKE_BELL_RATE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub source: String,
    pub alice: String,
    pub bob: String,
}

impl Endpoints {
    pub fn get(&self, role: Role) -> &str {
        match role {
            Role::Source => &self.source,
            Role::Alice => &self.alice,
            Role::Bob => &self.bob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub n: u64,
    pub runs: u64,
    /// Seeds the referee's angle draws only.
    pub master_seed: u64,
    pub endpoints: Endpoints,
    #[serde(with = "millis")]
    pub timeout: Duration,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl SessionConfig {
    pub fn new(n: u64, runs: u64, master_seed: u64, endpoints: Endpoints) -> Self {
        SessionConfig {
            n,
            runs,
            master_seed,
            endpoints,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn validate(&self) -> Result<(), Fault> {
        let e = &self.endpoints;
        let problem = if self.n == 0 {
            Some("pairs per run must be at least 1")
        } else if self.runs == 0 {
            Some("run count must be at least 1")
        } else if e.source == e.alice || e.source == e.bob || e.alice == e.bob {
            Some("the three station endpoints must be distinct")
        } else if self.timeout.is_zero() {
            Some("timeout must be positive")
        } else {
            None
        };
        match problem {
            Some(p) => Err(Fault::new(FaultKind::Config, None, p)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    Config,
    Connect,
    Handshake,
    Timeout,
    OutOfOrder,
    Malformed,
    Transport,
    /// The station itself reported a FAULT.
    Station,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FaultKind::Config => "configuration",
            FaultKind::Connect => "connect",
            FaultKind::Handshake => "handshake",
            FaultKind::Timeout => "timeout",
            FaultKind::OutOfOrder => "out-of-order",
            FaultKind::Malformed => "malformed",
            FaultKind::Transport => "transport",
            FaultKind::Station => "station",
        };
        f.write_str(s)
    }
}

/// A protocol violation or transport failure that aborted a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub kind: FaultKind,
    pub station: Option<Role>,
    pub run: Option<u64>,
    pub pair_id: Option<u64>,
    pub detail: String,
    /// The last messages exchanged before the fault.
    pub transcript: Vec<TranscriptEntry>,
}

impl Fault {
    pub fn new(kind: FaultKind, station: Option<Role>, detail: impl Into<String>) -> Self {
        Fault {
            kind,
            station,
            run: None,
            pair_id: None,
            detail: detail.into(),
            transcript: Vec::new(),
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FAULT({})", self.kind)?;
        if let Some(s) = self.station {
            write!(f, " from {s}")?;
        }
        if let (Some(r), Some(p)) = (self.run, self.pair_id) {
            write!(f, " at run {r} pair {p}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

impl std::error::Error for Fault {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    QuantumLike,
    NotQuantumLike,
}

impl Verdict {
    pub fn text(self) -> &'static str {
        match self {
            Verdict::QuantumLike => "quantum-like",
            Verdict::NotQuantumLike => "not quantum-like",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    pub n: u64,
    pub runs: u64,
    pub master_seed: u64,
    pub results: Vec<TrialResult>,
    pub summary: SweepRow,
    pub bell_violation_rate: f64,
    pub chsh_violation_rate: f64,
    pub mean_anticorr_pct: Option<f64>,
    pub anticorr_perfect_runs: u64,
    pub verdict: Verdict,
}

impl SessionScore {
    pub fn from_results(cfg: &SessionConfig, results: Vec<TrialResult>) -> Self {
        let summary = SweepRow::from_trials(cfg.n, &results);
        let anticorr_perfect_runs = summary.trials - summary.anticorr_imperfect;
        let bell_violation_rate = summary.bell_violation_rate();
        let verdict =
            if bell_violation_rate >= QUANTUM_LIKE_BELL_RATE && summary.anticorr_imperfect == 0 {
                Verdict::QuantumLike
            } else {
                Verdict::NotQuantumLike
            };
        SessionScore {
            n: cfg.n,
            runs: cfg.runs,
            master_seed: cfg.master_seed,
            bell_violation_rate,
            chsh_violation_rate: summary.chsh_violation_rate(),
            mean_anticorr_pct: summary.mean_anticorr_pct,
            anticorr_perfect_runs,
            summary,
            results,
            verdict,
        }
    }
}

struct Referee {
    cfg: SessionConfig,
    conns: [Conn; 3],
    transcript: Transcript,
    run: u64,
    pair: u64,
}

fn slot(role: Role) -> usize {
    match role {
        Role::Source => 0,
        Role::Alice => 1,
        Role::Bob => 2,
    }
}

fn connect(endpoint: &str, timeout: Duration) -> Result<TcpStream, String> {
    let addrs = endpoint
        .to_socket_addrs()
        .map_err(|e| format!("{endpoint}: {e}"))?;
    let mut last = format!("{endpoint}: no address");
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeout) {
            Ok(s) => return Ok(s),
            Err(e) => last = format!("{endpoint}: {e}"),
        }
    }
    Err(last)
}

impl Referee {
    fn fault(&self, kind: FaultKind, station: Option<Role>, detail: impl Into<String>) -> Fault {
        Fault {
            run: Some(self.run),
            pair_id: Some(self.pair),
            transcript: self.transcript.tail(),
            ..Fault::new(kind, station, detail)
        }
    }

    fn send(&mut self, role: Role, msg: &Message) -> Result<(), Fault> {
        self.transcript.log(Direction::Sent, role, msg);
        self.conns[slot(role)]
            .send(msg)
            .map_err(|e| self.fault(FaultKind::Transport, Some(role), e.to_string()))
    }

    fn recv(&mut self, role: Role) -> Result<Message, Fault> {
        match self.conns[slot(role)].recv() {
            Ok(msg) => {
                self.transcript.log(Direction::Received, role, &msg);
                if msg.kind == Kind::Fault {
                    let detail = msg.detail.unwrap_or_else(|| "no detail".into());
                    return Err(self.fault(FaultKind::Station, Some(role), detail));
                }
                Ok(msg)
            }
            Err(RecvError::Timeout) => Err(self.fault(
                FaultKind::Timeout,
                Some(role),
                format!("no message within {:?}", self.cfg.timeout),
            )),
            Err(RecvError::Closed) => {
                Err(self.fault(FaultKind::Transport, Some(role), "connection closed"))
            }
            Err(RecvError::Io(e)) => {
                Err(self.fault(FaultKind::Transport, Some(role), e.to_string()))
            }
            Err(RecvError::Malformed(e)) => Err(self.fault(
                FaultKind::Malformed,
                Some(role),
                format!("unparseable envelope: {e}"),
            )),
        }
    }

    /// Receives the next message from `role` and checks it is `kind` for the current pair.
    fn expect(&mut self, role: Role, kind: Kind) -> Result<Message, Fault> {
        let msg = self.recv(role)?;
        if msg.kind != kind {
            let detail = if msg.kind == Kind::Outcome {
                "OUTCOME before ANGLE".to_string()
            } else {
                format!("expected {kind}, got {}", msg.kind)
            };
            return Err(self.fault(FaultKind::OutOfOrder, Some(role), detail));
        }
        if msg.run != Some(self.run) || msg.pair_id != Some(self.pair) {
            return Err(self.fault(
                FaultKind::OutOfOrder,
                Some(role),
                format!(
                    "{kind} for run {:?} pair {:?}, expected run {} pair {}",
                    msg.run, msg.pair_id, self.run, self.pair
                ),
            ));
        }
        Ok(msg)
    }

    fn handshake(&mut self) -> Result<(), Fault> {
        for role in Role::ALL {
            let hello = Message {
                pairs: Some(self.cfg.n),
                runs: Some(self.cfg.runs),
                ..Message::hello(role)
            };
            self.send(role, &hello)?;
        }
        for role in Role::ALL {
            let reply = self.recv(role)?;
            if reply.kind != Kind::Hello {
                return Err(self.fault(
                    FaultKind::Handshake,
                    Some(role),
                    format!("expected HELLO, got {}", reply.kind),
                ));
            }
            if reply.role != Some(role) {
                return Err(self.fault(
                    FaultKind::Handshake,
                    Some(role),
                    format!("station answered as {:?}", reply.role),
                ));
            }
            if reply.version.is_some_and(|v| v != PROTOCOL_VERSION) {
                return Err(self.fault(
                    FaultKind::Handshake,
                    Some(role),
                    format!("unsupported protocol version {:?}", reply.version),
                ));
            }
        }
        Ok(())
    }

    fn hv_payloads(&mut self) -> Result<[Vec<u8>; 2], Fault> {
        let mut payloads: [Option<Vec<u8>>; 2] = [None, None];
        for _ in 0..2 {
            let msg = self.expect(Role::Source, Kind::Hv)?;
            let index = match msg.to {
                Some(Role::Alice) => 0,
                Some(Role::Bob) => 1,
                other => {
                    return Err(self.fault(
                        FaultKind::Malformed,
                        Some(Role::Source),
                        format!("HV addressed to {other:?}"),
                    ))
                }
            };
            let Some(bytes) = msg.payload_bytes() else {
                return Err(self.fault(
                    FaultKind::Malformed,
                    Some(Role::Source),
                    "HV payload missing or not base64",
                ));
            };
            if payloads[index].replace(bytes).is_some() {
                return Err(self.fault(
                    FaultKind::OutOfOrder,
                    Some(Role::Source),
                    "two HV payloads for the same station",
                ));
            }
        }
        let [Some(alice), Some(bob)] = payloads else {
            unreachable!("two distinct payloads were received")
        };
        Ok([alice, bob])
    }

    fn outcome(&mut self, role: Role) -> Result<Bit, Fault> {
        let msg = self.expect(role, Kind::Outcome)?;
        match msg.bit.map(Bit::try_from) {
            Some(Ok(bit)) => Ok(bit),
            _ => Err(self.fault(
                FaultKind::Malformed,
                Some(role),
                format!("OUTCOME bit {:?} is not 0 or 1", msg.bit),
            )),
        }
    }

    fn measure_pair(&mut self, seed: u64) -> Result<PairRecord, Fault> {
        let (run, pair) = (self.run, self.pair);
        self.send(Role::Source, &Message::prepare(run, pair))?;
        let [alice_hv, bob_hv] = self.hv_payloads()?;
        self.send(Role::Alice, &Message::hv(run, pair, None, &alice_hv))?;
        self.send(Role::Bob, &Message::hv(run, pair, None, &bob_hv))?;
        self.expect(Role::Alice, Kind::HvAck)?;
        self.expect(Role::Bob, Kind::HvAck)?;

        // angles exist only from here on
        let setting = draw_setting(&mut pair_stream(seed, pair, Channel::Measure));
        for (role, code) in [
            (Role::Alice, setting.a.code()),
            (Role::Bob, setting.b.code()),
        ] {
            let early = self.conns[slot(role)]
                .has_pending()
                .map_err(|e| self.fault(FaultKind::Transport, Some(role), e.to_string()))?;
            if early {
                let detail = match self.recv(role) {
                    Ok(m) if m.kind == Kind::Outcome => "OUTCOME before ANGLE".to_string(),
                    Ok(m) => format!("unsolicited {} before ANGLE", m.kind),
                    Err(f) => return Err(f),
                };
                return Err(self.fault(FaultKind::OutOfOrder, Some(role), detail));
            }
            self.send(role, &Message::angle(run, pair, code))?;
        }
        let alice = self.outcome(Role::Alice)?;
        let bob = self.outcome(Role::Bob)?;
        Ok(PairRecord {
            pair_id: pair,
            setting,
            alice,
            bob,
        })
    }

    fn run_all(&mut self) -> Result<Vec<TrialResult>, Fault> {
        self.handshake()?;
        let mut results = Vec::with_capacity(self.cfg.runs as usize);
        for run in 0..self.cfg.runs {
            self.run = run;
            let seed = trial_seed(self.cfg.master_seed, self.cfg.n, run);
            let mut tally = Tally::new();
            for pair in 0..self.cfg.n {
                self.pair = pair;
                tally.push(&self.measure_pair(seed)?);
            }
            for role in Role::ALL {
                self.send(role, &Message::run_done(run))?;
            }
            results.push(TrialResult::evaluate(tally, None));
        }
        Ok(results)
    }

    fn abort(&mut self, fault: &Fault) {
        let notice = Message::fault(fault.to_string());
        for role in Role::ALL {
            self.transcript.log(Direction::Sent, role, &notice);
            let _ = self.conns[slot(role)].send(&notice);
        }
        self.transcript.flush();
    }
}

/// Runs a full challenge session against three stations.
///
/// Each message exchanged is written to `transcript` as one JSON line when a
/// sink is given.
pub fn referee_session(
    cfg: &SessionConfig,
    transcript: Option<Box<dyn Write + Send>>,
) -> Result<SessionScore, Fault> {
    cfg.validate()?;
    let mut open = Vec::with_capacity(3);
    for role in Role::ALL {
        let stream = connect(cfg.endpoints.get(role), cfg.timeout)
            .map_err(|e| Fault::new(FaultKind::Connect, Some(role), e))?;
        let conn = Conn::new(stream, Some(cfg.timeout))
            .map_err(|e| Fault::new(FaultKind::Connect, Some(role), e.to_string()))?;
        open.push(conn);
    }
    let conns: [Conn; 3] = match open.try_into() {
        Ok(c) => c,
        Err(_) => unreachable!("three roles, three connections"),
    };
    let mut referee = Referee {
        cfg: cfg.clone(),
        conns,
        transcript: Transcript::new(transcript),
        run: 0,
        pair: 0,
    };
    match referee.run_all() {
        Ok(results) => {
            let score = SessionScore::from_results(cfg, results);
            let detail = format!(
                "bell_violation_rate={:.4} verdict={}",
                score.bell_violation_rate,
                score.verdict.text()
            );
            for role in Role::ALL {
                // stations may hang up once the last run is done
                let msg = Message::score(detail.clone());
                referee.transcript.log(Direction::Sent, role, &msg);
                let _ = referee.conns[slot(role)].send(&msg);
            }
            referee.transcript.flush();
            Ok(score)
        }
        Err(fault) => {
            referee.abort(&fault);
            Err(fault)
        }
    }
}
