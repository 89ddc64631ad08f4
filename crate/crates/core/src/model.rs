//! Block-model definitions, adjacency sampling and population matrices.
//!
//! Three model kinds share one parameterisation `(g, P, theta)`:
//!
//! * `Bm`: `A(i,j) ~ Bernoulli(P(g_i, g_j))`, `theta = 1`.
//! * `Dcbm`: `A(i,j) ~ Bernoulli(theta_i theta_j P(g_i, g_j))`, `0 < theta < 1`.
//! * `General`: real-valued entries with mean `theta_i theta_j P(g_i, g_j)`
//!   drawn from a [`NoiseSpec`], `theta > 0` unbounded.
//!
//! Sampled matrices are symmetric with a unit diagonal.

use faer::{Mat, MatRef};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::spectral::{eig_sym, SpectralDecomposition};

/// Entry distribution of the general real-valued model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// `N(mean, sd^2)`.
    Gaussian { sd: f64 },
    /// `scale * Bernoulli(mean / scale)`; requires `mean <= scale` everywhere.
    ScaledBernoulli { scale: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Gaussian { sd: 0.5 }
    }
}

impl NoiseSpec {
    /// Standard deviation of an entry with the given mean.
    pub fn sd(&self, mean: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sd } => sd,
            NoiseSpec::ScaledBernoulli { scale } => {
                let q = mean / scale;
                scale * (q * (1.0 - q)).max(0.0).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Bm,
    Dcbm,
    General(NoiseSpec),
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Bm => "bm",
            ModelKind::Dcbm => "dcbm",
            ModelKind::General(_) => "general",
        }
    }

    /// Whether sampled off-diagonal entries are 0/1.
    pub fn is_binary(&self) -> bool {
        !matches!(self, ModelKind::General(_))
    }
}

/// A fully instantiated model: membership, edge-probability matrix and
/// heterogeneity parameters.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    k: usize,
    membership: Vec<usize>,
    edge_prob: Mat<f64>,
    theta: Vec<f64>,
    kind: ModelKind,
}

impl ModelSpec {
    pub fn new(
        membership: Vec<usize>,
        edge_prob: Mat<f64>,
        theta: Vec<f64>,
        kind: ModelKind,
    ) -> Result<Self> {
        let n = membership.len();
        let k = edge_prob.nrows();
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if n == 0 {
            return bad("node count must be positive".into());
        }
        if k == 0 || edge_prob.ncols() != k {
            return bad(format!(
                "edge-probability matrix must be a non-empty square matrix, got {}x{}",
                edge_prob.nrows(),
                edge_prob.ncols()
            ));
        }
        if k > n {
            return bad(format!("community count {k} exceeds node count {n}"));
        }
        for a in 0..k {
            for b in 0..k {
                let p = edge_prob[(a, b)];
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("P({},{}) = {p} outside [0, 1]", a + 1, b + 1));
                }
                if p != edge_prob[(b, a)] {
                    return bad(format!("P is not symmetric at ({},{})", a + 1, b + 1));
                }
            }
        }
        let mut seen = vec![false; k];
        for (i, &g) in membership.iter().enumerate() {
            if g >= k {
                return bad(format!("node {i} has label {} outside 1..={k}", g + 1));
            }
            seen[g] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return bad(format!("community {} is empty", empty + 1));
        }
        if theta.len() != n {
            return bad(format!("theta has length {}, expected {n}", theta.len()));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return bad(format!("non-finite heterogeneity parameter {t}"));
        }
        match kind {
            ModelKind::Bm => {
                if theta.iter().any(|&t| t != 1.0) {
                    return bad("block model requires theta = 1 for every node".into());
                }
            }
            ModelKind::Dcbm => {
                if let Some(t) = theta.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
                    return bad(format!("DCBM requires 0 < theta < 1, found {t}"));
                }
            }
            ModelKind::General(noise) => {
                if let Some(t) = theta.iter().find(|&&t| t <= 0.0) {
                    return bad(format!("general model requires theta > 0, found {t}"));
                }
                match noise {
                    NoiseSpec::Gaussian { sd } if !(sd >= 0.0 && sd.is_finite()) => {
                        return bad(format!("Gaussian noise sd must be finite and >= 0, got {sd}"));
                    }
                    NoiseSpec::ScaledBernoulli { scale } if !(scale > 0.0 && scale.is_finite()) => {
                        return bad(format!("Bernoulli scale must be positive, got {scale}"));
                    }
                    _ => {}
                }
            }
        }
        let spec = ModelSpec {
            k,
            membership,
            edge_prob,
            theta,
            kind,
        };
        // Largest mean over node pairs i != j, per block pair.
        let worst = spec.max_pair_mean();
        match kind {
            ModelKind::Dcbm if worst > 1.0 => {
                return bad(format!("edge probability {worst} exceeds 1"));
            }
            ModelKind::General(NoiseSpec::ScaledBernoulli { scale }) if worst > scale => {
                return bad(format!("entry mean {worst} exceeds Bernoulli scale {scale}"));
            }
            _ => {}
        }
        Ok(spec)
    }

    pub fn bm(membership: Vec<usize>, edge_prob: Mat<f64>) -> Result<Self> {
        let n = membership.len();
        Self::new(membership, edge_prob, vec![1.0; n], ModelKind::Bm)
    }

    pub fn dcbm(membership: Vec<usize>, edge_prob: Mat<f64>, theta: Vec<f64>) -> Result<Self> {
        Self::new(membership, edge_prob, theta, ModelKind::Dcbm)
    }

    pub fn general(
        membership: Vec<usize>,
        edge_prob: Mat<f64>,
        theta: Vec<f64>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        Self::new(membership, edge_prob, theta, ModelKind::General(noise))
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn edge_prob(&self) -> MatRef<'_, f64> {
        self.edge_prob.as_ref()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn community_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &g in &self.membership {
            sizes[g] += 1;
        }
        sizes
    }

    /// `E A(i,j) = theta_i theta_j P(g_i, g_j)`.
    #[inline]
    pub fn entry_mean(&self, i: usize, j: usize) -> f64 {
        self.theta[i] * self.theta[j] * self.edge_prob[(self.membership[i], self.membership[j])]
    }

    /// Standard deviation of the off-diagonal entry `(i, j)`.
    pub fn entry_sd(&self, i: usize, j: usize) -> f64 {
        let mean = self.entry_mean(i, j);
        match self.kind {
            ModelKind::Bm | ModelKind::Dcbm => (mean * (1.0 - mean)).max(0.0).sqrt(),
            ModelKind::General(noise) => noise.sd(mean),
        }
    }

    /// `max_{i != j} sd(A(i,j))`.
    pub fn max_offdiag_sd(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(self.entry_sd(i, j));
            }
        }
        worst
    }

    fn max_pair_mean(&self) -> f64 {
        // Top two theta per community so that i != j is respected.
        let mut top = vec![[0.0f64; 2]; self.k];
        for (i, &g) in self.membership.iter().enumerate() {
            let t = self.theta[i];
            let slot = &mut top[g];
            if t > slot[0] {
                slot[1] = slot[0];
                slot[0] = t;
            } else if t > slot[1] {
                slot[1] = t;
            }
        }
        let mut worst = 0.0f64;
        for a in 0..self.k {
            for b in a..self.k {
                let tt = if a == b {
                    top[a][0] * top[a][1]
                } else {
                    top[a][0] * top[b][0]
                };
                worst = worst.max(tt * self.edge_prob[(a, b)]);
            }
        }
        worst
    }
}

/// Observed network: an `n x n` symmetric matrix.
///
/// Sampled matrices always carry a unit diagonal; matrices read from edge
/// lists may keep a zero diagonal when asked to.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix(Mat<f64>);

impl AdjacencyMatrix {
    /// Wraps a matrix after checking it is square, finite and exactly symmetric.
    pub fn new(data: Mat<f64>) -> Result<Self> {
        let n = data.nrows();
        if data.ncols() != n || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "adjacency matrix must be square and non-empty, got {}x{}",
                n,
                data.ncols()
            )));
        }
        for j in 0..n {
            for i in 0..n {
                let v = data[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite);
                }
                if i > j && v != data[(j, i)] {
                    return Err(Error::NotSymmetric((v - data[(j, i)]).abs()));
                }
            }
        }
        Ok(AdjacencyMatrix(data))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.0.as_ref()
    }

    pub fn into_mat(self) -> Mat<f64> {
        self.0
    }

    pub fn has_unit_diagonal(&self) -> bool {
        (0..self.n()).all(|i| self.0[(i, i)] == 1.0)
    }

    /// Whether every off-diagonal entry is 0 or 1.
    pub fn is_binary(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| (0..n).all(|i| i == j || self.0[(i, j)] == 0.0 || self.0[(i, j)] == 1.0))
    }

    /// Principal submatrix on `nodes` (in the given order).
    pub fn submatrix(&self, nodes: &[usize]) -> AdjacencyMatrix {
        AdjacencyMatrix(Mat::from_fn(nodes.len(), nodes.len(), |i, j| {
            self.0[(nodes[i], nodes[j])]
        }))
    }

    /// Simultaneous row/column permutation: entry `(i, j)` of the result is
    /// entry `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> AdjacencyMatrix {
        self.submatrix(perm)
    }
}

/// Samples the upper triangle independently, mirrors it and sets the
/// diagonal to one. Identical `(spec, seed)` pairs give identical matrices.
pub fn generate(spec: &ModelSpec, seed: u64) -> AdjacencyMatrix {
    let n = spec.n();
    let mut rng = stream_rng(seed, Stream::Adjacency);
    let mut a = Mat::<f64>::zeros(n, n);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for i in 0..n {
        a[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let mean = spec.entry_mean(i, j);
            let v = match spec.kind {
                ModelKind::Bm | ModelKind::Dcbm => {
                    if rng.random::<f64>() < mean {
                        1.0
                    } else {
                        0.0
                    }
                }
                ModelKind::General(NoiseSpec::Gaussian { sd }) => {
                    mean + sd * normal.sample(&mut rng)
                }
                ModelKind::General(NoiseSpec::ScaledBernoulli { scale }) => {
                    if rng.random::<f64>() < mean / scale {
                        scale
                    } else {
                        0.0
                    }
                }
            };
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    AdjacencyMatrix(a)
}

/// Per-node heterogeneity profile. Node index `i` runs over `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaProfile {
    Constant(f64),
    /// Independent `Uniform[lo, hi)` draws.
    Uniform { lo: f64, hi: f64 },
    /// `c0 + (d0 - c0) (i/n)^exponent`.
    Power { c0: f64, d0: f64, exponent: f64 },
    /// `c0` for `i <= n/2`, `d0` otherwise.
    Step { c0: f64, d0: f64 },
}

impl ThetaProfile {
    pub fn linear(c0: f64, d0: f64) -> Self {
        ThetaProfile::Power {
            c0,
            d0,
            exponent: 1.0,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, ThetaProfile::Uniform { .. })
    }
}

pub fn theta_profile(profile: ThetaProfile, n: usize, seed: u64) -> Vec<f64> {
    let nf = n as f64;
    match profile {
        ThetaProfile::Constant(c) => vec![c; n],
        ThetaProfile::Uniform { lo, hi } => {
            let mut rng = stream_rng(seed, Stream::Theta);
            (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
        }
        ThetaProfile::Power { c0, d0, exponent } => (1..=n)
            .map(|i| c0 + (d0 - c0) * (i as f64 / nf).powf(exponent))
            .collect(),
        ThetaProfile::Step { c0, d0 } => (1..=n)
            .map(|i| if (i as f64) <= nf / 2.0 { c0 } else { d0 })
            .collect(),
    }
}

/// `n` uniform labels in `0..k`, redrawn until every community is non-empty.
pub fn uniform_membership(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!(
            "cannot place {n} nodes into {k} non-empty communities"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Membership);
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut seen = vec![false; k];
        labels.iter().for_each(|&g| seen[g] = true);
        if seen.iter().all(|&s| s) {
            return Ok(labels);
        }
    }
}

/// Population objects: `E(A)`, the reduced `K x K` matrix `P*`, community
/// weights and the scale linking their spectra.
#[derive(Debug, Clone)]
pub struct PopulationMatrices {
    /// `E(A) = sum_{a,b} P(a,b) theta_a theta_b'`, diagonal included as given
    /// by the expansion (not forced to one).
    pub expected_adjacency: Mat<f64>,
    /// `P*(a,b) = P(a,b) sqrt(w_a w_b)`.
    pub reduced: Mat<f64>,
    /// `w_k = ||theta_k||^2 / ||theta||^2` (the size fraction `n_k/n` under BM).
    pub weights: Vec<f64>,
    /// `||theta||^2` (`n` under BM).
    pub scale: f64,
    /// `n x K` matrix whose column `k` is `theta_k / ||theta_k||`.
    pub basis: Mat<f64>,
}

impl PopulationMatrices {
    pub fn reduced_decomposition(&self) -> Result<SpectralDecomposition> {
        eig_sym(self.reduced.as_ref())
    }

    /// Leading `K` eigenpairs of `E(A)` built from the reduced matrix:
    /// `lambda_i = scale * lambda*_i`, `q_i = sum_k q*_i(k) f*_k`.
    pub fn eigenpairs(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        let reduced = self.reduced_decomposition()?;
        let values = reduced.eigenvalues().iter().map(|l| self.scale * l).collect();
        let vectors = &self.basis * reduced.eigenvectors();
        Ok((values, vectors))
    }
}

pub fn population(spec: &ModelSpec) -> PopulationMatrices {
    let n = spec.n();
    let k = spec.k();
    let mut block_norm2 = vec![0.0f64; k];
    for (i, &g) in spec.membership.iter().enumerate() {
        block_norm2[g] += spec.theta[i] * spec.theta[i];
    }
    let scale: f64 = block_norm2.iter().sum();
    let weights: Vec<f64> = block_norm2.iter().map(|b| b / scale).collect();
    let reduced = Mat::from_fn(k, k, |a, b| {
        spec.edge_prob[(a, b)] * (weights[a] * weights[b]).sqrt()
    });
    let basis = Mat::from_fn(n, k, |i, c| {
        if spec.membership[i] == c {
            spec.theta[i] / block_norm2[c].sqrt()
        } else {
            0.0
        }
    });
    let expected_adjacency = Mat::from_fn(n, n, |i, j| spec.entry_mean(i, j));
    PopulationMatrices {
        expected_adjacency,
        reduced,
        weights,
        scale,
        basis,
    }
}

/// Dense `K x K` matrix from row-major values.
pub fn square_matrix(k: usize, row_major: &[f64]) -> Result<Mat<f64>> {
    if row_major.len() != k * k {
        return Err(Error::InvalidSpec(format!(
            "expected {} entries for a {k}x{k} matrix, got {}",
            k * k,
            row_major.len()
        )));
    }
    Ok(Mat::from_fn(k, k, |i, j| row_major[i * k + j]))
}
