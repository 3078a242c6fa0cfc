//! Monte Carlo simulation of the three-angle EPR photon-pair experiment.
//!
//! Alice measures at `a·π/8` with `a ∈ {0, 3}`, Bob at `b·π/8` with
//! `b ∈ {0, 2}`. The crate provides
//!
//! * the quantum pair source (`sin²δ` correlations),
//! * three classical hidden-variable models (Bell's random model, a
//!   saturating model and a cheating model that gives up anti-correlation),
//! * the Bell counter inequality `N₁(U) ≤ N₂(E) + N₃(U)`, the CHSH
//!   S-parameter and an anti-correlation audit,
//! * seeded, order-independent Monte Carlo sweeps,
//! * a referee that runs hidden-variable models as isolated stations and
//!   only reveals angles after the hidden variables have been delivered.

pub mod error;
pub mod hv;
pub mod model;
pub mod montecarlo;
pub mod quantum;
pub mod referee;
pub mod report;
pub mod rng;
pub mod setting;
pub mod stats;

pub use error::{EprError, Result};
pub use hv::{HvModel, HvTriple, PreparedPair};
pub use model::ModelSpec;
pub use montecarlo::{run_trial, sweep, SweepOptions, SweepReport, SweepRow, TrialResult};
pub use setting::{AliceAngle, AngleSetting, Bit, BobAngle, PairRecord, RunConfig};
pub use stats::{
    anticorr_audit, bell_test, chsh, class_config_check, tally, AntiCorrResult, BellResult,
    ChshResult, ClassConfigMatrix, Tally,
};
