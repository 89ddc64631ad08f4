//! SCDRE and the baseline spectral clustering methods.
//!
//! All four methods embed the nodes using leading eigenvectors and hand the
//! rows of the embedding to the same k-means engine:
//!
//! | method | embedding |
//! |--------|-----------|
//! | SCDRE  | rows of the leading eigenspace of `A`, normalised to unit length, tiny components truncated |
//! | oPCA   | raw rows of the leading eigenspace of `A` |
//! | nPCA   | raw rows of the leading eigenspace of `D^{-1/2} A D^{-1/2}` |
//! | SCORE  | entry-wise ratios `eta_z(i) / eta_1(i)`, `z >= 2`, clamped to `[-log n, log n]` |

use std::cell::OnceCell;
use std::fmt;
use std::str::FromStr;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{default_threshold, estimate_k, KEstimate, DEFAULT_DELTA};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::model::AdjacencyMatrix;
use crate::spectral::{eig_sym, leading_eigenspace, normalized_laplacian, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Scdre,
    Opca,
    Npca,
    Score,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Scdre, Method::Opca, Method::Npca, Method::Score];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Scdre => "scdre",
            Method::Opca => "opca",
            Method::Npca => "npca",
            Method::Score => "score",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scdre" => Ok(Method::Scdre),
            "opca" => Ok(Method::Opca),
            "npca" => Ok(Method::Npca),
            "score" => Ok(Method::Score),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected scdre, opca, npca or score)"
            ))),
        }
    }
}

/// Number of communities to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    /// Estimate `K` from the adjacency spectrum.
    Auto,
    Fixed(usize),
}

impl FromStr for KChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        match s.parse::<usize>() {
            Ok(k) if k > 0 => Ok(KChoice::Fixed(k)),
            _ => Err(Error::InvalidArgument(format!(
                "invalid community count '{s}' (expected 'auto' or a positive integer)"
            ))),
        }
    }
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => f.write_str("auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub delta: f64,
    pub kmeans: KMeansConfig,
    /// SCORE ratio clamp; `None` means `log n`.
    pub score_clamp: Option<f64>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            delta: DEFAULT_DELTA,
            kmeans: KMeansConfig::default(),
            score_clamp: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommunityAssignment {
    /// 0-based labels in `0..k_used`.
    pub labels: Vec<usize>,
    pub k_used: usize,
    pub method: Method,
    pub objective: f64,
    /// Present when `K` was estimated.
    pub estimate: Option<KEstimate>,
}

/// The truncated ratio embedding used by SCDRE.
#[derive(Debug, Clone)]
pub struct RatioMatrix {
    pub pi: Mat<f64>,
    pub cutoffs: Vec<f64>,
    /// Row-major `n x K`; `true` where an entry was zeroed.
    pub truncation_mask: Vec<bool>,
}

impl RatioMatrix {
    pub fn is_truncated(&self, i: usize, z: usize) -> bool {
        self.truncation_mask[i * self.pi.ncols() + z]
    }

    pub fn truncated_fraction(&self) -> f64 {
        let t = self.truncation_mask.iter().filter(|&&b| b).count();
        t as f64 / self.truncation_mask.len() as f64
    }
}

/// Builds the SCDRE embedding from an `n x K` leading eigenspace `u`.
///
/// Entry `(i, z)` is `u(i,z) / ||u(i,.)||` when `|u(i,z)| > CO_i` and zero
/// otherwise, with `CO_i = sum_z |u(i,z)| / (K sqrt(n) ln n)`. The row is not
/// renormalised after truncation. An all-zero row stays all-zero.
pub fn ratio_matrix(u: MatRef<'_, f64>) -> Result<RatioMatrix> {
    let (n, k) = (u.nrows(), u.ncols());
    if k == 0 {
        return Err(Error::InvalidArgument("ratio matrix needs at least one eigenvector".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("ratio matrix needs n >= 2 (log n > 0)".into()));
    }
    let denom = k as f64 * (n as f64).sqrt() * (n as f64).ln();
    let mut pi = Mat::<f64>::zeros(n, k);
    let mut cutoffs = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n * k);
    for i in 0..n {
        let abs_sum: f64 = (0..k).map(|z| u[(i, z)].abs()).sum();
        let norm = (0..k).map(|z| u[(i, z)] * u[(i, z)]).sum::<f64>().sqrt();
        let cutoff = abs_sum / denom;
        cutoffs.push(cutoff);
        for z in 0..k {
            let v = u[(i, z)];
            let keep = v.abs() > cutoff;
            mask.push(!keep);
            if keep {
                pi[(i, z)] = v / norm;
            }
        }
    }
    Ok(RatioMatrix {
        pi,
        cutoffs,
        truncation_mask: mask,
    })
}

/// SCORE embedding: `n x (K-1)` matrix of `eta_z(i) / eta_1(i)` clamped to
/// `[-clamp, clamp]`. A zero `eta_1(i)` maps to the clamp bound carrying the
/// sign of the numerator (zero if both vanish).
pub fn score_matrix(u: MatRef<'_, f64>, clamp: f64) -> Mat<f64> {
    let (n, k) = (u.nrows(), u.ncols());
    Mat::from_fn(n, k.saturating_sub(1), |i, z| {
        let num = u[(i, z + 1)];
        let den = u[(i, 0)];
        if den == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                clamp.copysign(num)
            }
        } else {
            (num / den).clamp(-clamp, clamp)
        }
    })
}

/// An adjacency matrix with lazily computed decompositions, so several
/// methods can share one eigensolve.
pub struct Spectra<'a> {
    adjacency: &'a AdjacencyMatrix,
    adjacency_eig: OnceCell<SpectralDecomposition>,
    laplacian_eig: OnceCell<SpectralDecomposition>,
}

impl<'a> Spectra<'a> {
    pub fn new(adjacency: &'a AdjacencyMatrix) -> Self {
        Spectra {
            adjacency,
            adjacency_eig: OnceCell::new(),
            laplacian_eig: OnceCell::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn adjacency(&self) -> Result<&SpectralDecomposition> {
        if let Some(d) = self.adjacency_eig.get() {
            return Ok(d);
        }
        let d = eig_sym(self.adjacency.as_mat())?;
        Ok(self.adjacency_eig.get_or_init(|| d))
    }

    pub fn laplacian(&self) -> Result<&SpectralDecomposition> {
        if let Some(d) = self.laplacian_eig.get() {
            return Ok(d);
        }
        let l = normalized_laplacian(self.adjacency);
        let d = eig_sym(l.as_ref())?;
        Ok(self.laplacian_eig.get_or_init(|| d))
    }
}

fn resolve_k(spectra: &Spectra<'_>, k: KChoice, delta: f64) -> Result<(usize, Option<KEstimate>)> {
    match k {
        KChoice::Fixed(0) => Err(Error::InvalidArgument("community count must be positive".into())),
        KChoice::Fixed(k) if k > spectra.n() => Err(Error::InvalidArgument(format!(
            "community count {k} exceeds node count {}",
            spectra.n()
        ))),
        KChoice::Fixed(k) => Ok((k, None)),
        KChoice::Auto => {
            let d = spectra.adjacency()?;
            let est = estimate_k(d.eigenvalues(), default_threshold(spectra.n(), delta)?);
            match est.k_hat {
                0 => Err(Error::NoCommunityStructure),
                k => Ok((k, Some(est))),
            }
        }
    }
}

fn single_cluster(n: usize, method: Method, points: Option<MatRef<'_, f64>>) -> CommunityAssignment {
    let labels = vec![0; n];
    let objective = points.map_or(0.0, |p| crate::kmeans::objective(p, &labels, 1));
    CommunityAssignment {
        labels,
        k_used: 1,
        method,
        objective,
        estimate: None,
    }
}

/// Runs `method` on pre-computed spectra.
pub fn detect_with(
    spectra: &Spectra<'_>,
    method: Method,
    k: KChoice,
    opts: &DetectOptions,
    seed: u64,
) -> Result<CommunityAssignment> {
    let n = spectra.n();
    let (k, estimate) = resolve_k(spectra, k, opts.delta)?;
    let embedding = match method {
        Method::Scdre => ratio_matrix(leading_eigenspace(spectra.adjacency()?, k)?.as_ref())?.pi,
        Method::Opca => leading_eigenspace(spectra.adjacency()?, k)?,
        Method::Npca => leading_eigenspace(spectra.laplacian()?, k)?,
        Method::Score => {
            let u = leading_eigenspace(spectra.adjacency()?, k)?;
            let clamp = opts.score_clamp.unwrap_or_else(|| (n as f64).ln());
            score_matrix(u.as_ref(), clamp)
        }
    };
    let mut out = if k == 1 {
        let pts = (embedding.ncols() > 0).then(|| embedding.as_ref());
        single_cluster(n, method, pts)
    } else {
        let r = kmeans(embedding.as_ref(), k, &opts.kmeans, seed)?;
        CommunityAssignment {
            labels: r.labels,
            k_used: k,
            method,
            objective: r.objective,
            estimate: None,
        }
    };
    out.estimate = estimate;
    Ok(out)
}

pub fn detect(
    a: &AdjacencyMatrix,
    method: Method,
    k: KChoice,
    opts: &DetectOptions,
    seed: u64,
) -> Result<CommunityAssignment> {
    detect_with(&Spectra::new(a), method, k, opts, seed)
}

/// SCDRE: eigendecomposition, optional `K` estimation, truncated ratio
/// embedding, k-means.
pub fn scdre(a: &AdjacencyMatrix, k: KChoice, opts: &DetectOptions, seed: u64) -> Result<CommunityAssignment> {
    detect(a, Method::Scdre, k, opts, seed)
}

pub fn opca(a: &AdjacencyMatrix, k: usize, opts: &DetectOptions, seed: u64) -> Result<CommunityAssignment> {
    detect(a, Method::Opca, KChoice::Fixed(k), opts, seed)
}

pub fn npca(a: &AdjacencyMatrix, k: usize, opts: &DetectOptions, seed: u64) -> Result<CommunityAssignment> {
    detect(a, Method::Npca, KChoice::Fixed(k), opts, seed)
}

pub fn score(a: &AdjacencyMatrix, k: usize, opts: &DetectOptions, seed: u64) -> Result<CommunityAssignment> {
    detect(a, Method::Score, KChoice::Fixed(k), opts, seed)
}
