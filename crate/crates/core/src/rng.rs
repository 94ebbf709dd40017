//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 (`rand_chacha`), a counter-based
//! generator whose output is specified bit-for-bit, so a `(seed, stream)` pair
//! produces the same sequence on every platform. Independent consumers of one
//! seed use distinct ChaCha streams instead of re-hashing the seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream ids reserved for the samplers and initialisers.
pub mod stream {
    pub const INTERIOR: u64 = 0;
    pub const BOUNDARY: u64 = 1;
    pub const INIT: u64 = 2;
    pub const PROBE: u64 = 3;
    pub const MISC: u64 = 4;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the `index`-th member of a family derived from `seed`
/// (e.g. the per-step batch of a resampling run).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
