//! Seeded pseudo-random streams.
//!
//! Every random decision in the crate (fold shuffling, subsampling, column
//! sampling) draws from xoshiro256++ seeded through SplitMix64, so a given
//! seed reproduces the same stream on every platform.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Prng = Xoshiro256PlusPlus;

pub fn prng(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Seed of the tree built for `class` in boosting round `round`.
pub fn tree_seed(seed: u64, round: usize, n_classes: usize, class: usize) -> u64 {
    seed ^ (round * n_classes + class) as u64
}

/// Derives an independent child seed, e.g. per outer fold.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    // One SplitMix64 step over the combined value.
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
