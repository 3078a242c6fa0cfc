//! Reference stations: a built-in hidden-variable model split into a
//! source, an Alice station and a Bob station that speak the wire protocol.
//!
//! The source serializes the prepared pair (current triple and original
//! class) into the payload; Alice and Bob decode it and apply the model's
//! readout to the angle they are told.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use super::conn::{Conn, RecvError};
use super::protocol::{Kind, Message, Role};
use super::session::Endpoints;
use crate::hv::{HvModel, PreparedPair};
use crate::rng::{pair_stream, trial_seed, Channel};
use crate::setting::{AliceAngle, BobAngle};

/// Deliberate protocol violations, for exercising the referee.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Misbehavior {
    #[default]
    None,
    /// Answers HV with an OUTCOME instead of HV_ACK.
    OutcomeInsteadOfAck,
    /// Sends HV_ACK and an unsolicited OUTCOME together.
    OutcomeAfterAck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StationConfig {
    pub role: Role,
    pub model: HvModel,
    /// Seeds the source's hidden-variable preparation; unused by Alice and Bob.
    pub seed: u64,
    pub misbehavior: Misbehavior,
}

#[derive(Debug, Error)]
pub enum StationError {
    #[error("transport error: {0}")]
    Io(#[from] io::Error),
    #[error("referee closed the connection unexpectedly")]
    Closed,
    #[error("malformed message from referee: {0}")]
    Malformed(String),
    #[error("referee reported a fault: {0}")]
    RefereeFault(String),
    #[error("unexpected {0} message")]
    Unexpected(Kind),
}

impl From<RecvError> for StationError {
    fn from(e: RecvError) -> Self {
        match e {
            RecvError::Timeout => StationError::Io(io::ErrorKind::TimedOut.into()),
            RecvError::Closed => StationError::Closed,
            RecvError::Io(e) => StationError::Io(e),
            RecvError::Malformed(m) => StationError::Malformed(m),
        }
    }
}

fn field<T>(v: Option<T>, name: &str) -> Result<T, StationError> {
    v.ok_or_else(|| StationError::Malformed(format!("missing `{name}`")))
}

/// Serves one referee connection until the session ends.
pub fn run_station(stream: TcpStream, cfg: StationConfig) -> Result<(), StationError> {
    let mut conn = Conn::new(stream, None)?;
    let mut pairs = None;
    let mut held: Option<PreparedPair> = None;
    loop {
        let msg = match conn.recv() {
            Ok(m) => m,
            Err(RecvError::Closed) if pairs.is_some() => return Ok(()),
            Err(e) => return Err(e.into()),
        };
        let run = msg.run.unwrap_or(0);
        let pair_id = msg.pair_id.unwrap_or(0);
        match (msg.kind, cfg.role) {
            (Kind::Hello, role) => {
                pairs = Some(field(msg.pairs, "pairs")?);
                conn.send(&Message::hello(role))?;
            }
            (Kind::Prepare, Role::Source) => {
                let n = field(pairs, "pairs")?;
                let seed = trial_seed(cfg.seed, n, field(msg.run, "run")?);
                let prepared = cfg.model.prepare(&mut pair_stream(
                    seed,
                    field(msg.pair_id, "pair_id")?,
                    Channel::Prepare,
                ));
                let bytes = prepared.to_bytes();
                conn.send_all(&[
                    Message::hv(run, pair_id, Some(Role::Alice), &bytes),
                    Message::hv(run, pair_id, Some(Role::Bob), &bytes),
                ])?;
            }
            (Kind::Hv, Role::Alice | Role::Bob) => {
                let bytes = field(msg.payload_bytes(), "payload")?;
                let prepared = PreparedPair::from_bytes(&bytes).ok_or_else(|| {
                    StationError::Malformed("payload is not a prepared pair".into())
                })?;
                held = Some(prepared);
                match cfg.misbehavior {
                    Misbehavior::None => conn.send(&Message::hv_ack(run, pair_id))?,
                    Misbehavior::OutcomeInsteadOfAck => {
                        conn.send(&Message::outcome(run, pair_id, 0))?
                    }
                    Misbehavior::OutcomeAfterAck => conn.send_all(&[
                        Message::hv_ack(run, pair_id),
                        Message::outcome(run, pair_id, 0),
                    ])?,
                }
            }
            (Kind::Angle, role @ (Role::Alice | Role::Bob)) => {
                let prepared = held.take().ok_or(StationError::Unexpected(Kind::Angle))?;
                let code = i64::from(field(msg.code, "code")?);
                let bit = if role == Role::Alice {
                    let a = AliceAngle::try_from(code)
                        .map_err(|e| StationError::Malformed(e.to_string()))?;
                    cfg.model.measure_alice(&prepared, a)
                } else {
                    let b = BobAngle::try_from(code)
                        .map_err(|e| StationError::Malformed(e.to_string()))?;
                    cfg.model.measure_bob(&prepared, b)
                };
                conn.send(&Message::outcome(run, pair_id, bit.value()))?;
            }
            (Kind::RunDone, _) => {}
            (Kind::Score, _) => return Ok(()),
            (Kind::Fault, _) => {
                return Err(StationError::RefereeFault(msg.detail.unwrap_or_default()))
            }
            (kind, _) => {
                let err = StationError::Unexpected(kind);
                let _ = conn.send(&Message::fault(err.to_string()));
                return Err(err);
            }
        }
    }
}

/// Accepts a single referee connection on `listener` and serves it.
pub fn serve_station(listener: TcpListener, cfg: StationConfig) -> Result<(), StationError> {
    let (stream, _) = listener.accept()?;
    run_station(stream, cfg)
}

/// Three in-process station threads on loopback ports.
pub struct LocalStations {
    pub endpoints: Endpoints,
    handles: Vec<JoinHandle<Result<(), StationError>>>,
}

impl LocalStations {
    pub fn spawn(model: HvModel, seed: u64) -> io::Result<Self> {
        Self::spawn_with(model, seed, |_| Misbehavior::None)
    }

    /// Like [`LocalStations::spawn`], with a per-role misbehavior.
    pub fn spawn_with(
        model: HvModel,
        seed: u64,
        misbehavior: impl Fn(Role) -> Misbehavior,
    ) -> io::Result<Self> {
        let mut addrs: Vec<SocketAddr> = Vec::with_capacity(3);
        let mut handles = Vec::with_capacity(3);
        for role in Role::ALL {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            addrs.push(listener.local_addr()?);
            let cfg = StationConfig {
                role,
                model,
                seed,
                misbehavior: misbehavior(role),
            };
            handles.push(
                thread::Builder::new()
                    .name(format!("station-{role}"))
                    .spawn(move || serve_station(listener, cfg))?,
            );
        }
        Ok(LocalStations {
            endpoints: Endpoints {
                source: addrs[0].to_string(),
                alice: addrs[1].to_string(),
                bob: addrs[2].to_string(),
            },
            handles,
        })
    }

    /// Waits for all stations to finish; returns each station's result.
    pub fn join(self) -> Vec<Result<(), StationError>> {
        self.handles
            .into_iter()
            .map(|h| h.join().expect("station thread panicked"))
            .collect()
    }
}
