//! Angle settings, outcomes and per-pair records.
//!
//! Angles are integer codes in units of π/8; no floating-point angle is
//! ever compared for equality.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{EprError, Result};
use crate::model::ModelSpec;

/// A measurement outcome, 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub struct Bit(bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    pub fn flip(self) -> Bit {
        Bit(!self.0)
    }

    pub fn value(self) -> u8 {
        self.0 as u8
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        Bit(b)
    }
}

impl From<Bit> for u8 {
    fn from(b: Bit) -> u8 {
        b.value()
    }
}

impl TryFrom<u8> for Bit {
    type Error = EprError;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Bit::ZERO),
            1 => Ok(Bit::ONE),
            other => Err(EprError::InvalidBit(other.into())),
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Alice's analyzer: code 0 (α = 0) or code 3 (α = 3π/8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum AliceAngle {
    Zero,
    Three,
}

/// Bob's analyzer: code 0 (β = 0) or code 2 (β = π/4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum BobAngle {
    Zero,
    Two,
}

impl AliceAngle {
    pub fn code(self) -> u8 {
        match self {
            AliceAngle::Zero => 0,
            AliceAngle::Three => 3,
        }
    }
}

impl BobAngle {
    pub fn code(self) -> u8 {
        match self {
            BobAngle::Zero => 0,
            BobAngle::Two => 2,
        }
    }
}

impl TryFrom<i64> for AliceAngle {
    type Error = EprError;

    fn try_from(code: i64) -> Result<Self> {
        match code {
            0 => Ok(AliceAngle::Zero),
            3 => Ok(AliceAngle::Three),
            other => Err(EprError::InvalidAliceCode(other)),
        }
    }
}

impl TryFrom<i64> for BobAngle {
    type Error = EprError;

    fn try_from(code: i64) -> Result<Self> {
        match code {
            0 => Ok(BobAngle::Zero),
            2 => Ok(BobAngle::Two),
            other => Err(EprError::InvalidBobCode(other)),
        }
    }
}

impl TryFrom<u8> for AliceAngle {
    type Error = EprError;

    fn try_from(code: u8) -> Result<Self> {
        AliceAngle::try_from(i64::from(code))
    }
}

impl TryFrom<u8> for BobAngle {
    type Error = EprError;

    fn try_from(code: u8) -> Result<Self> {
        BobAngle::try_from(i64::from(code))
    }
}

impl From<AliceAngle> for u8 {
    fn from(a: AliceAngle) -> u8 {
        a.code()
    }
}

impl From<BobAngle> for u8 {
    fn from(b: BobAngle) -> u8 {
        b.code()
    }
}

/// One of the four legal (Alice, Bob) analyzer combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AngleSetting {
    pub a: AliceAngle,
    pub b: BobAngle,
}

impl AngleSetting {
    /// The four settings ordered by configuration index d = |b − a|.
    pub const ALL: [AngleSetting; 4] = [
        AngleSetting {
            a: AliceAngle::Zero,
            b: BobAngle::Zero,
        },
        AngleSetting {
            a: AliceAngle::Three,
            b: BobAngle::Two,
        },
        AngleSetting {
            a: AliceAngle::Zero,
            b: BobAngle::Two,
        },
        AngleSetting {
            a: AliceAngle::Three,
            b: BobAngle::Zero,
        },
    ];

    pub fn new(a: AliceAngle, b: BobAngle) -> Self {
        AngleSetting { a, b }
    }

    /// Builds a setting from raw integer codes, rejecting anything outside
    /// `a ∈ {0, 3}`, `b ∈ {0, 2}`.
    pub fn from_codes(a: i64, b: i64) -> Result<Self> {
        Ok(AngleSetting {
            a: AliceAngle::try_from(a)?,
            b: BobAngle::try_from(b)?,
        })
    }

    /// Signed relative angle `b − a` in units of π/8: one of 0, −1, 2, −3.
    pub fn delta_code(self) -> i8 {
        self.b.code() as i8 - self.a.code() as i8
    }

    /// Configuration index d = |b − a| ∈ {0, 1, 2, 3}.
    pub fn config(self) -> usize {
        self.delta_code().unsigned_abs() as usize
    }

    /// Relative analyzer angle δ in radians.
    pub fn delta_radians(self) -> f64 {
        f64::from(self.delta_code()) * std::f64::consts::FRAC_PI_8
    }
}

/// Returns `(d, b − a)` for a setting given as raw integer codes.
pub fn config_of(a: i64, b: i64) -> Result<(usize, i8)> {
    let setting = AngleSetting::from_codes(a, b)?;
    Ok((setting.config(), setting.delta_code()))
}

/// One measured photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: u64,
    pub setting: AngleSetting,
    #[serde(rename = "A")]
    pub alice: Bit,
    #[serde(rename = "B")]
    pub bob: Bit,
}

impl PairRecord {
    pub fn is_equal(&self) -> bool {
        self.alice == self.bob
    }
}

/// Parameters of a single simulated experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: u64,
    pub seed: u64,
    pub model: ModelSpec,
}

impl RunConfig {
    pub fn new(n: u64, seed: u64, model: ModelSpec) -> Result<Self> {
        if n == 0 {
            return Err(EprError::ZeroPairs);
        }
        Ok(RunConfig { n, seed, model })
    }
}
