//! Fixtures shared by the criterion benchmarks.

use spectral_comm::experiment::Preset;
use spectral_comm::model::generate;
use spectral_comm::{AdjacencyMatrix, ModelSpec};

/// One Experiment-3 style DCBM sample (power-law heterogeneity, K = 2).
pub fn dcbm_sample(n: usize, seed: u64) -> (ModelSpec, AdjacencyMatrix) {
    let spec = Preset::Exp3
        .template(n, 2)
        .and_then(|t| t.instantiate(seed))
        .expect("preset template is valid");
    let a = generate(&spec, seed);
    (spec, a)
}
