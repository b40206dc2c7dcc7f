//! Seed handling. Every random object in the crate is built from an explicit
//! `u64` seed; there is no global RNG.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used throughout the crate.
pub type SketchRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> SketchRng {
    SketchRng::seed_from_u64(seed)
}

/// One SplitMix64 finalization step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of stream labels.
///
/// The rule is `h = splitmix64(master)`, then `h = splitmix64(h ^ part)` for
/// each part in order. Trial seeds in the experiment harness are
/// `derive_seed(master, &[kind_id, j, trial])`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |h, &p| splitmix64(h ^ p))
}
