#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_comm::model::{square_matrix, uniform_membership, ModelSpec, NoiseSpec};
use spectral_comm::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_edge_prob<R: Rng>(rng: &mut R, k: usize) -> Mat<f64> {
    let mut vals = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let p = if a == b {
                rng.random_range(0.3..1.0)
            } else {
                rng.random_range(0.0..0.5)
            };
            vals[a * k + b] = p;
            vals[b * k + a] = p;
        }
    }
    square_matrix(k, &vals).unwrap()
}

/// Random spec of the given kind (0 = BM, 1 = DCBM, 2 = general) with
/// `k <= k_max` communities.
pub fn random_spec<R: Rng>(rng: &mut R, kind: usize, k_max: usize, n_range: std::ops::RangeInclusive<usize>) -> ModelSpec {
    let k = rng.random_range(1..=k_max);
    let n = rng.random_range(n_range).max(k);
    let membership = uniform_membership(n, k, rng.random()).unwrap();
    let p = random_edge_prob(rng, k);
    match kind {
        0 => ModelSpec::bm(membership, p).unwrap(),
        1 => {
            let theta = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
            ModelSpec::dcbm(membership, p, theta).unwrap()
        }
        _ => {
            let theta = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
            let sd = rng.random_range(0.1..1.0);
            ModelSpec::general(membership, p, theta, NoiseSpec::Gaussian { sd }).unwrap()
        }
    }
}

pub fn balanced(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i * k / n).collect()
}
