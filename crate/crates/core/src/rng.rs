//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a master seed
//! and a list of tags (replication index, iteration, row, ...). Streams with
//! distinct tags are independent, so work can be reordered or parallelised
//! without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master`, producing a well-spread child seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(master: u64, tags: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, tags))
}

/// Domain tags so that streams used for different purposes never collide.
pub mod tag {
    pub const DATA: u64 = 0x6461_7461;
    pub const FIT: u64 = 0x6669_74;
    pub const AMPUTE: u64 = 0x616d_70;
    pub const FOLDS: u64 = 0x666f_6c64;
    pub const SWEEP: u64 = 0x7377_6570;
    pub const ROW: u64 = 0x726f_77;
    pub const PREDICT: u64 = 0x7072_6564;
}
