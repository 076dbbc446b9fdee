//! Reproducible random streams.
//!
//! Every generator draws from `ChaCha8Rng` seeded through
//! [`rng_from_seed`]. Independent sub-streams are derived from a parent seed
//! with [`child_seed`], which hashes `(parent, index)` with the SplitMix64
//! finalizer. The derivation depends only on its two arguments, so child
//! streams are identical no matter which thread consumes them or in which
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DesignRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> DesignRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `parent`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Seed reached by following `path` down from `root`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(root, |s, &i| child_seed(s, i))
}
