//! Counter-based random streams.
//!
//! Every replicate (bootstrap draw, Monte Carlo repetition) gets its own
//! ChaCha stream keyed by `(seed, index)`, so results never depend on how
//! work is scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed of the `index`-th child of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    stream(master, index).next_u64()
}
