//! Seed derivation. Every random decision in the harness draws from a
//! ChaCha stream whose seed is derived from the run seed plus a purpose tag,
//! so adding a new consumer never shifts an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a base seed with a sequence of tags.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(base), |acc, &t| mix64(acc ^ mix64(t)))
}

pub fn stream(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tags))
}

/// Uniform draw in `[0, 1)` from a single hashed value.
pub fn unit_from(seed: u64) -> f64 {
    (mix64(seed) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) mod tag {
    pub const SEED_SET: u64 = 1;
    pub const RANDOM_RANK: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const SYNTH: u64 = 4;
}
