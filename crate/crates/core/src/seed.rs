//! Counter-based seed derivation.
//!
//! Every stochastic stage draws from its own stream, keyed by the master seed
//! and a path of integers (stage id, method key, instance index, ...). Streams
//! never depend on evaluation order, so results do not change with the worker
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stage identifiers folded into derived seeds.
pub mod stage {
    pub const FAMILY: u64 = 1;
    pub const PHASE1: u64 = 2;
    pub const PAIRED: u64 = 3;
    pub const TRAIN_VAL: u64 = 4;
    pub const TRAIN_ARG: u64 = 5;
    pub const TRAIN_PSI: u64 = 6;
    pub const MAML: u64 = 7;
    pub const TEST_INSTANCES: u64 = 8;
    pub const PROPOSE: u64 = 9;
    pub const DIAGNOSE: u64 = 10;
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic value in [0, 1) indexed by `i`.
pub fn splitmix_unit(i: u64) -> f64 {
    (splitmix64(i) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_mul(GOLDEN_GAMMA))))
}

pub fn stream(master: u64, path: &[u64]) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(master, path))
}

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}
