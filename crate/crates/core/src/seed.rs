//! Seed derivation for reproducible parallel work.
//!
//! Every random stream in the crate is keyed by a logical path (master seed,
//! cell, replicate, attempt, fold, purpose) rather than by execution order,
//! so results do not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags that separate independent streams derived from one parent.
pub mod purpose {
    pub const DATA: u64 = 0x64617461;
    pub const SPLIT: u64 = 0x73706c74;
    pub const NUISANCE: u64 = 0x6e756973;
    pub const BOOTSTRAP: u64 = 0x626f6f74;
    pub const MULTI_SPLIT: u64 = 0x6d756c74;
}

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a sequence of logical identifiers into a child seed.
pub fn derive(parent: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(parent), |h, &p| splitmix64(h ^ splitmix64(p)))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 64-bit FNV-1a, used to turn a cell descriptor into a stable identifier.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}
