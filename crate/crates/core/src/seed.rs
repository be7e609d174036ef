//! Deterministic seed derivation.
//!
//! Every random stream in a run (graph placement, link jitter, per-trial
//! losses and noise) is keyed off a single master seed through `derive`, so
//! a run is reproducible bit-for-bit regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full 64-bit avalanche.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent child seed from `master` for the given stream label.
pub fn derive(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream))
}

/// Stream labels keeping every random stream of a run disjoint.
pub mod stream {
    pub const SIGNAL: u64 = 1;
    pub const LINK_JITTER: u64 = 2;
    pub const TOPOLOGY: u64 = 3;
    /// Per-trial reception draws, derived from the trial seed.
    pub const TRIAL_LOSS: u64 = 4;
    /// Per-trial measurement noise, derived from the trial seed.
    pub const TRIAL_NOISE: u64 = 5;
    /// The realization the cap solver may be pinned to.
    pub const THRESHOLD_REALIZATION: u64 = 6;
    /// Base for per-trial seeds: trial `t` uses `TRIAL_BASE + t`.
    pub const TRIAL_BASE: u64 = 0x1000;
}

/// Deterministic RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
