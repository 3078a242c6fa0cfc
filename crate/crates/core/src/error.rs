use thiserror::Error;

pub type Result<T, E = EprError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EprError {
    #[error("invalid Alice angle code {0} (expected 0 or 3)")]
    InvalidAliceCode(i64),

    #[error("invalid Bob angle code {0} (expected 0 or 2)")]
    InvalidBobCode(i64),

    #[error("invalid outcome bit {0} (expected 0 or 1)")]
    InvalidBit(i64),

    #[error("pair count must be at least 1")]
    ZeroPairs,

    #[error("trial count must be at least 1")]
    ZeroTrials,

    #[error("no pairs were measured in configuration d={config}")]
    InsufficientSamples { config: usize },

    #[error("model `{model}` is not supported here: {reason}")]
    UnsupportedModel { model: String, reason: String },

    #[error("unknown model `{0}` (expected quantum, bell-random, saturated or cheating)")]
    UnknownModel(String),
}
