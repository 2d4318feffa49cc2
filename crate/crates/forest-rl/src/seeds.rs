//! Deterministic seed derivation.
//!
//! Every run hangs off a single master seed. Components that need their own
//! randomness (per-iteration learners, per-policy training data, evaluation
//! episodes, ...) derive a sub-seed from the master seed, a short label naming
//! the stream, and an index. Worker threads never share generators, so results
//! do not depend on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; a solid cheap mixer with full avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of a named sub-stream.
pub fn sub_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = master;
    for &b in label.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ index)
}

/// Generator for a named sub-stream.
pub fn sub_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, label, index))
}
