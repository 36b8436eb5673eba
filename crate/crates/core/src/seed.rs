//! Seed derivation. Every random stream in a simulation is keyed by a
//! master seed plus a short list of tags (round, client id, purpose), so
//! the order in which work is scheduled never changes the numbers drawn.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used throughout the crate.
pub mod tag {
    pub const INIT: u64 = 0x1;
    pub const TRAIN_DATA: u64 = 0x2;
    pub const TEST_DATA: u64 = 0x3;
    pub const PARTITION: u64 = 0x4;
    pub const SAMPLE_CLIENTS: u64 = 0x5;
    pub const LOCAL_TRAIN: u64 = 0x6;
    pub const IDEAL: u64 = 0x7;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `tags` into `master` one at a time.
pub fn derive(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix(master), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, tags))
}
