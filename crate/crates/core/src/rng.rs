//! Seeded random streams.
//!
//! Every parallel worker or disorder realization gets its own ChaCha stream
//! keyed by `(master seed, index)`, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Two-level stream for nested sampling (e.g. realization × path chunk).
pub fn substream(seed: u64, outer: u64, inner: u64) -> StreamRng {
    let mixed = seed ^ outer.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    stream(mixed, inner)
}

/// A child seed for realization `index`, e.g. the seed recorded with a potential sample.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index).next_u64()
}
