//! Seed derivation for reproducible Monte-Carlo streams.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` seeded through
//! [`stream_rng`]. Replication `r` of an experiment seeded with `seed` uses the
//! stream `seed ^ r`; experiment cells (for example different sample sizes)
//! first mix their label into the master seed with [`mix_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser; a bijection on `u64`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the master seed of an experiment cell labelled by `label`.
pub fn mix_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

/// Seed of replication `r` under master seed `seed`.
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    seed ^ r
}

pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
