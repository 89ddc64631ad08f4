//! Spectral community detection for networks drawn from the stochastic block
//! model, its degree-corrected variant and a real-valued generalisation.
//!
//! The crate covers the whole pipeline:
//!
//! * [`model`]: model definitions, adjacency sampling and the population
//!   matrices `E(A)` / reduced `K x K` matrix.
//! * [`spectral`]: dense symmetric eigendecomposition ordered by absolute
//!   eigenvalue, leading eigenspaces and the normalised adjacency used by nPCA.
//! * [`estimate`]: the eigenvalue-ratio estimator of the number of communities.
//! * [`kmeans`] and [`cluster`]: SCDRE and the oPCA / nPCA / SCORE baselines.
//! * [`metrics`] and [`experiment`]: permutation-matched error rates and the
//!   seeded Monte-Carlo driver.
//! * [`theory`]: numerical checks of the eigenvector and eigenvalue
//!   perturbation results on simulated instances.
//! * [`io`] and [`config`]: edge lists, label files, TOML configs and CSV.
//!
//! Labels are 0-based `usize` values everywhere inside the crate; files on
//! disk use 1-based labels.

#![allow(clippy::needless_range_loop)]

pub mod cluster;
pub mod config;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod io;
pub mod kmeans;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod spectral;
pub mod theory;

pub use faer::{Mat, MatRef};

pub use cluster::{CommunityAssignment, DetectOptions, KChoice, Method, RatioMatrix};
pub use error::{Error, Result};
pub use estimate::KEstimate;
pub use experiment::ExperimentReport;
pub use kmeans::{KMeansConfig, KMeansResult};
pub use metrics::ErrorReport;
pub use model::{AdjacencyMatrix, ModelKind, ModelSpec, NoiseSpec, PopulationMatrices, ThetaProfile};
pub use spectral::SpectralDecomposition;
