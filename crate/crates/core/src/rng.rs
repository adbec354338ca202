//! Seeded random streams.
//!
//! Every randomized component draws from its own ChaCha stream so that
//! reseeding one component never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream labels, one per randomized component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Topology = 1,
    Weights = 2,
    Bias = 3,
    Init = 4,
    Sweep = 5,
}

pub fn stream(seed: u64, label: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label as u64);
    rng
}

/// Mixes an attempt or trial index into a base seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
