//! Classical hidden-variable models.
//!
//! A pair carries three bits `(A₃, B₀, B₂)`: Alice's answer at a = 3 and
//! Bob's answers at b = 0 and b = 2. Alice's answer at a = 0 is not stored;
//! anti-correlation forces it to `1 − B₀`. The bits read as a binary number
//! give the pair class `i = 4·A₃ + 2·B₀ + B₂`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EprError, Result};
use crate::model::ModelSpec;
use crate::setting::{AliceAngle, Bit, BobAngle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HvTriple {
    pub a3: Bit,
    pub b0: Bit,
    pub b2: Bit,
}

impl HvTriple {
    pub fn new(a3: Bit, b0: Bit, b2: Bit) -> Self {
        HvTriple { a3, b0, b2 }
    }

    /// Inverse of [`class_index`]; `class` is taken modulo 8.
    pub fn from_class(class: u8) -> Self {
        HvTriple {
            a3: Bit::from(class & 4 != 0),
            b0: Bit::from(class & 2 != 0),
            b2: Bit::from(class & 1 != 0),
        }
    }

    /// All eight triples, in class order.
    pub fn all() -> impl Iterator<Item = HvTriple> {
        (0..8).map(HvTriple::from_class)
    }
}

/// A prepared pair: the triple after any saturating transformation, plus the
/// class the pair had before that transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreparedPair {
    pub hv: HvTriple,
    pub original_class: u8,
}

impl PreparedPair {
    pub fn honest(hv: HvTriple) -> Self {
        PreparedPair {
            hv,
            original_class: class_index(hv),
        }
    }

    /// Compact wire form: the current triple in the low three bits of the
    /// first byte, the original class in the second.
    pub fn to_bytes(self) -> [u8; 2] {
        [class_index(self.hv), self.original_class]
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        match *bytes {
            [current, original] if current < 8 && original < 8 => Some(PreparedPair {
                hv: HvTriple::from_class(current),
                original_class: original,
            }),
            _ => None,
        }
    }
}

/// Three independent fair bits, drawn in the order A₃, B₀, B₂.
pub fn hv_random<R: Rng + ?Sized>(rng: &mut R) -> HvTriple {
    let mut bit = || Bit::from(rng.random::<f64>() >= 0.5);
    let a3 = bit();
    let b0 = bit();
    let b2 = bit();
    HvTriple { a3, b0, b2 }
}

pub fn class_index(hv: HvTriple) -> u8 {
    4 * hv.a3.value() + 2 * hv.b0.value() + hv.b2.value()
}

/// Removes classes 2 and 5 by flipping A₃ (2 → 6, 5 → 1).
pub fn saturate(hv: HvTriple) -> HvTriple {
    match class_index(hv) {
        2 | 5 => HvTriple {
            a3: hv.a3.flip(),
            ..hv
        },
        _ => hv,
    }
}

/// Alice's readout. With `cheat` set, a class-1 pair (judged by its class
/// before saturation) measured at a = 0 reports B₀ instead of 1 − B₀.
pub fn measure_alice(pair: &PreparedPair, a: AliceAngle, cheat: bool) -> Bit {
    match a {
        AliceAngle::Zero if cheat && pair.original_class == 1 => pair.hv.b0,
        AliceAngle::Zero => pair.hv.b0.flip(),
        AliceAngle::Three => pair.hv.a3,
    }
}

pub fn measure_bob(pair: &PreparedPair, b: BobAngle) -> Bit {
    match b {
        BobAngle::Zero => pair.hv.b0,
        BobAngle::Two => pair.hv.b2,
    }
}

/// The in-process hidden-variable models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HvModel {
    BellRandom,
    Saturated,
    Cheating,
}

impl HvModel {
    pub const ALL: [HvModel; 3] = [HvModel::BellRandom, HvModel::Saturated, HvModel::Cheating];

    pub fn prepare<R: Rng + ?Sized>(self, rng: &mut R) -> PreparedPair {
        let raw = hv_random(rng);
        let original_class = class_index(raw);
        let hv = match self {
            HvModel::BellRandom => raw,
            HvModel::Saturated | HvModel::Cheating => saturate(raw),
        };
        PreparedPair { hv, original_class }
    }

    pub fn measure_alice(self, pair: &PreparedPair, a: AliceAngle) -> Bit {
        measure_alice(pair, a, self == HvModel::Cheating)
    }

    pub fn measure_bob(self, pair: &PreparedPair, b: BobAngle) -> Bit {
        measure_bob(pair, b)
    }

    pub fn spec(self) -> ModelSpec {
        match self {
            HvModel::BellRandom => ModelSpec::BellRandom,
            HvModel::Saturated => ModelSpec::Saturated,
            HvModel::Cheating => ModelSpec::Cheating,
        }
    }
}

impl TryFrom<&ModelSpec> for HvModel {
    type Error = EprError;

    fn try_from(model: &ModelSpec) -> Result<Self> {
        match model {
            ModelSpec::BellRandom => Ok(HvModel::BellRandom),
            ModelSpec::Saturated => Ok(HvModel::Saturated),
            ModelSpec::Cheating => Ok(HvModel::Cheating),
            ModelSpec::Quantum => Err(EprError::UnsupportedModel {
                model: model.name().into(),
                reason: "quantum outcomes depend on the relative angle of both analyzers, \
                         which no single station ever learns"
                    .into(),
            }),
            ModelSpec::External(_) => Err(EprError::UnsupportedModel {
                model: model.name().into(),
                reason: "external contenders are only reachable through the referee".into(),
            }),
        }
    }
}

impl TryFrom<ModelSpec> for HvModel {
    type Error = EprError;

    fn try_from(model: ModelSpec) -> Result<Self> {
        HvModel::try_from(&model)
    }
}

/// Prepares one pair for a hidden-variable model spec.
pub fn prepare_pair<R: Rng + ?Sized>(model: &ModelSpec, rng: &mut R) -> Result<PreparedPair> {
    Ok(HvModel::try_from(model)?.prepare(rng))
}
