//! Seed handling. Every stochastic step draws from its own ChaCha stream so
//! that changing, say, the number of k-means restarts never perturbs the
//! sampled adjacency matrix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream identifiers derived from one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Adjacency = 0,
    Theta = 1,
    Membership = 2,
    KMeans = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of repetition `rep` in a Monte-Carlo run.
pub fn repetition_seed(base_seed: u64, rep: usize) -> u64 {
    base_seed.wrapping_add(rep as u64)
}
