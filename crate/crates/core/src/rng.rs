//! Seed derivation.
//!
//! Every random stream is a `ChaCha8Rng` seeded from a 64-bit value derived
//! with [`derive_seed`] from a base seed and a path of integers naming the
//! stream (cell, trial, restart, ...). Streams are therefore independent of
//! scheduling order and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used when deriving seeds.
pub mod stream {
    pub const MODEL: u64 = 1;
    pub const SAMPLE: u64 = 2;
    pub const KMEANS: u64 = 3;
    pub const TRIAL: u64 = 4;
    pub const GUARD: u64 = 5;
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `base` with each element of `path` in turn.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}
