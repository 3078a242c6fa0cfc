use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::EprError;

/// Which pair source a run uses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Quantum statistics: needs the joint relative angle of both stations.
    Quantum,
    /// Bell's hidden variables: three independent fair bits per pair.
    BellRandom,
    /// Hidden variables with classes 2 and 5 removed.
    Saturated,
    /// Saturated hidden variables plus Alice's misreport at a = 0 for class 1.
    Cheating,
    /// A contender reached through the referee protocol.
    External(ExternalEndpoints),
}

/// Transport addresses of the three stations of an external contender.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalEndpoints {
    pub source: String,
    pub alice: String,
    pub bob: String,
}

impl ModelSpec {
    /// Short name used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Quantum => "quantum",
            ModelSpec::BellRandom => "bell-random",
            ModelSpec::Saturated => "saturated",
            ModelSpec::Cheating => "cheating",
            ModelSpec::External(_) => "external",
        }
    }

    pub fn is_hidden_variable(&self) -> bool {
        matches!(
            self,
            ModelSpec::BellRandom | ModelSpec::Saturated | ModelSpec::Cheating
        )
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = EprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantum" => Ok(ModelSpec::Quantum),
            "bell-random" | "bell" => Ok(ModelSpec::BellRandom),
            "saturated" => Ok(ModelSpec::Saturated),
            "cheating" => Ok(ModelSpec::Cheating),
            other => Err(EprError::UnknownModel(other.to_string())),
        }
    }
}
