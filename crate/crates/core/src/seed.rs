//! Seed plumbing. Every random stream in an experiment is derived from one
//! 64-bit master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of repetition `r` (1-based) of a scenario run with master seed `seed`.
pub fn repetition_seed(seed: u64, repetition: usize) -> u64 {
    seed ^ repetition as u64
}

/// Derives an independent sub-stream seed (SplitMix64 finalizer over
/// `base + stream`).
pub fn derive(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named sub-streams, so call sites do not collide on ad-hoc integers.
pub mod stream {
    pub const SAMPLE: u64 = 1;
    pub const EXPLAIN: u64 = 2;
    pub const SURROGATE: u64 = 3;
    pub const HOLDOUT: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const TARGET: u64 = 6;
    pub const CANDIDATE: u64 = 7;
    pub const RESTART: u64 = 1 << 32;
}
