//! Seed derivation. Every random draw in the crate comes from a ChaCha8 stream
//! keyed by a master seed and a purpose tag, so that independent stages never
//! share a stream and reruns are bit-identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a list of tags.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

pub fn rng(seed: u64, tags: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tags))
}

/// Purpose tags used with [`derive`].
pub mod tag {
    pub const TRUNK_INIT: u64 = 1;
    pub const HEAD_INIT: u64 = 2;
    pub const DECISION_INIT: u64 = 3;
    pub const PARTITION: u64 = 4;
    pub const POOL: u64 = 5;
    pub const DETECTOR_SET: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const REPLACEMENT: u64 = 8;
}
