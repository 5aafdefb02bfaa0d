//! Deterministic random streams.
//!
//! Every independent task (a polymer sample, a chain, a coupling draw) gets
//! its own generator seeded from `(master_seed, task_index)`, so results never
//! depend on how tasks are scheduled.

use rand::SeedableRng;

/// The generator used throughout the toolkit.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Mixes a master seed and a task index into a task seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for task `index` of a run seeded with `master`.
pub fn rng_for(master: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, index))
}
