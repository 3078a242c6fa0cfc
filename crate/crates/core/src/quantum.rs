//! The quantum pair source.
//!
//! Alice's outcome is a fair bit. Bob's equals Alice's with probability
//! sin²δ and is its complement otherwise, so at δ = 0 the pair is always
//! anti-correlated. The source needs δ, i.e. both analyzer settings, which
//! is exactly what no local station can know.

use rand::Rng;

use crate::setting::{AliceAngle, AngleSetting, Bit, BobAngle};

/// sin²(d·π/8) for d = 0..3; δ enters only squared, so its sign is irrelevant.
pub const EQUAL_PROBABILITY: [f64; 4] =
    [0.0, 0.146_446_609_406_726_24, 0.5, 0.853_553_390_593_273_8];

/// Draws Alice's and Bob's analyzer codes with two fair coins, Alice first.
pub fn draw_setting<R: Rng + ?Sized>(rng: &mut R) -> AngleSetting {
    let a = if rng.random::<f64>() < 0.5 {
        AliceAngle::Zero
    } else {
        AliceAngle::Three
    };
    let b = if rng.random::<f64>() < 0.5 {
        BobAngle::Zero
    } else {
        BobAngle::Two
    };
    AngleSetting { a, b }
}

/// Samples the quantum outcomes `(A, B)` for one pair.
pub fn quantum_measure<R: Rng + ?Sized>(rng: &mut R, setting: AngleSetting) -> (Bit, Bit) {
    let alice = Bit::from(rng.random::<f64>() >= 0.5);
    let bob = if rng.random::<f64>() < EQUAL_PROBABILITY[setting.config()] {
        alice
    } else {
        alice.flip()
    };
    (alice, bob)
}
