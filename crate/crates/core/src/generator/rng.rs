//! Seeding rules.
//!
//! Every random stream is a ChaCha8 generator seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, which is platform independent. Seeds
//! for independent trials are derived from a master seed by [`derive_seed`]:
//!
//! ```text
//! s_0 = splitmix64(master)
//! s_{i+1} = splitmix64(s_i ^ splitmix64(part_i))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ProcessRng = ChaCha8Rng;

/// The SplitMix64 output function applied to `x + 0x9e3779b97f4a7c15`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream identified by `parts` (e.g. grid index, trial index).
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |s, &p| splitmix64(s ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ProcessRng {
    ChaCha8Rng::seed_from_u64(seed)
}
