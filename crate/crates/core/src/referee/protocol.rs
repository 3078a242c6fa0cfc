//! Wire envelopes. One JSON object per line; absent fields are omitted.

use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kind {
    Hello,
    Prepare,
    Hv,
    HvAck,
    Angle,
    Outcome,
    RunDone,
    Score,
    Fault,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Hello => "HELLO",
            Kind::Prepare => "PREPARE",
            Kind::Hv => "HV",
            Kind::HvAck => "HV_ACK",
            Kind::Angle => "ANGLE",
            Kind::Outcome => "OUTCOME",
            Kind::RunDone => "RUN_DONE",
            Kind::Score => "SCORE",
            Kind::Fault => "FAULT",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Alice,
    Bob,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Source, Role::Alice, Role::Bob];

    pub fn name(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Alice => "alice",
            Role::Bob => "bob",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source" => Ok(Role::Source),
            "alice" => Ok(Role::Alice),
            "bob" => Ok(Role::Bob),
            other => Err(format!(
                "unknown role `{other}` (expected source, alice or bob)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<u64>,
    /// Destination station of an HV envelope sent by the source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Role>,
    /// Base64 hidden-variable bytes; never interpreted by the referee.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Message {
    pub fn new(kind: Kind) -> Self {
        Message {
            kind,
            role: None,
            version: None,
            pairs: None,
            runs: None,
            run: None,
            pair_id: None,
            to: None,
            payload: None,
            code: None,
            bit: None,
            detail: None,
        }
    }

    pub fn hello(role: Role) -> Self {
        Message {
            role: Some(role),
            version: Some(PROTOCOL_VERSION),
            ..Message::new(Kind::Hello)
        }
    }

    fn at(kind: Kind, run: u64, pair_id: u64) -> Self {
        Message {
            run: Some(run),
            pair_id: Some(pair_id),
            ..Message::new(kind)
        }
    }

    pub fn prepare(run: u64, pair_id: u64) -> Self {
        Message::at(Kind::Prepare, run, pair_id)
    }

    pub fn hv(run: u64, pair_id: u64, to: Option<Role>, payload: &[u8]) -> Self {
        Message {
            to,
            payload: Some(STANDARD.encode(payload)),
            ..Message::at(Kind::Hv, run, pair_id)
        }
    }

    pub fn hv_ack(run: u64, pair_id: u64) -> Self {
        Message::at(Kind::HvAck, run, pair_id)
    }

    pub fn angle(run: u64, pair_id: u64, code: u8) -> Self {
        Message {
            code: Some(code),
            ..Message::at(Kind::Angle, run, pair_id)
        }
    }

    pub fn outcome(run: u64, pair_id: u64, bit: u8) -> Self {
        Message {
            bit: Some(bit),
            ..Message::at(Kind::Outcome, run, pair_id)
        }
    }

    pub fn run_done(run: u64) -> Self {
        Message {
            run: Some(run),
            ..Message::new(Kind::RunDone)
        }
    }

    pub fn score(detail: impl Into<String>) -> Self {
        Message {
            detail: Some(detail.into()),
            ..Message::new(Kind::Score)
        }
    }

    pub fn fault(detail: impl Into<String>) -> Self {
        Message {
            detail: Some(detail.into()),
            ..Message::new(Kind::Fault)
        }
    }

    /// Decoded payload bytes, if the payload is present and valid base64.
    pub fn payload_bytes(&self) -> Option<Vec<u8>> {
        self.payload.as_ref().and_then(|p| STANDARD.decode(p).ok())
    }

    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("message serializes");
        s.push('\n');
        s
    }
}
