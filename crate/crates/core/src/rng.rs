//! Seed derivation. Every random stream is a ChaCha8 generator seeded from
//! `(run seed, stream tag, counter)`, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep independent consumers of one run seed apart.
pub mod stream {
    pub const FOREST_TREE: u64 = 1;
    pub const SVM_EPOCH: u64 = 2;
    pub const SPLIT_CLASS: u64 = 3;
    pub const SYNTH_IMAGE: u64 = 4;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter)
}

pub fn stream_rng(seed: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, counter))
}
