//! Seeded random streams.
//!
//! Every stream is a `ChaCha8Rng` seeded through `seed_from_u64`. Replication
//! `r` of a run with master seed `s` uses seed `s ^ splitmix64(r)`, so any
//! replication can be regenerated on its own and replications can run in any
//! order or in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in output metadata so results can be tied to a generator.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.3 seed_from_u64; substream = seed ^ splitmix64(index)";

pub type StreamRng = ChaCha8Rng;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(master: u64, index: u64) -> u64 {
    master ^ splitmix64(index)
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
