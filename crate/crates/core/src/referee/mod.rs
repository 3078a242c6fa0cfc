//! Locality-enforcing challenge harness.
//!
//! A referee connects to three stations (source, Alice, Bob) and relays
//! newline-delimited JSON envelopes between them. Stations never talk to
//! each other. For every pair the referee asks the source for two opaque
//! payloads, delivers them, waits for both acknowledgements, and only then
//! draws and announces the analyzer angles. See `docs/protocol.md`.

mod conn;
pub mod protocol;
pub mod session;
pub mod station;
pub mod transcript;

pub use protocol::{Kind, Message, Role, PROTOCOL_VERSION};
pub use session::{
    referee_session, Endpoints, Fault, FaultKind, SessionConfig, SessionScore, Verdict,
};
pub use station::{
    run_station, serve_station, LocalStations, Misbehavior, StationConfig, StationError,
};
pub use transcript::{Direction, TranscriptEntry};
