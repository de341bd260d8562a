//! Deterministic seed derivation for parallel Monte Carlo.
//!
//! A master seed is folded with a list of stream identifiers (mode tag,
//! `N`, trial index, ...) through the SplitMix64 finalizer:
//!
//! ```text
//! s ← splitmix64(master)
//! for id in stream: s ← splitmix64(s ⊕ splitmix64(id + 0x9E3779B97F4A7C15))
//! ```
//!
//! Every trial therefore owns an independent ChaCha8 stream regardless of
//! which thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    stream.iter().fold(splitmix64(master), |s, &id| {
        splitmix64(s ^ splitmix64(id.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// The generator used for all simulation draws.
pub type SimRng = ChaCha8Rng;

pub fn rng_for(master: u64, stream: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream))
}
