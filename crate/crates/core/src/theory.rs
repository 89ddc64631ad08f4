//! Numerical checks of the spectral perturbation results that underpin the
//! estimator and SCDRE: exact population identities, the noise-norm bound,
//! entrywise eigenvector convergence and row separation.

use std::ops::Range;

use faer::{Mat, MatRef};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{population, AdjacencyMatrix, ModelSpec};
use crate::spectral::{eig_sym, eigenvalues_sym, spectral_norm_sym, SpectralDecomposition};

/// Relative tolerance for treating population eigenvalues as one group.
pub const GROUP_TOL: f64 = 1e-8;

/// Groups closer than this (relative to the largest eigenvalue) trigger a
/// gap warning in [`linf_residual`].
pub const GAP_WARN: f64 = 1e-3;

/// Max relative deviation between the `K` leading eigenvalues of `E(A)` and
/// `scale * eig(P*)`.
pub fn eigen_transform_check(spec: &ModelSpec) -> Result<f64> {
    let pop = population(spec);
    let k = spec.k();
    let mut direct: Vec<f64> = eigenvalues_sym(pop.expected_adjacency.as_ref())?[..k].to_vec();
    let (mut reduced, _) = pop.eigenpairs()?;
    // Compare by value: near-ties of opposite sign may order differently.
    direct.sort_by(|a, b| b.total_cmp(a));
    reduced.sort_by(|a, b| b.total_cmp(a));
    let top = reduced.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(direct
        .iter()
        .zip(&reduced)
        .map(|(d, r)| (d - r).abs() / r.abs().max(1e-6 * top))
        .fold(0.0, f64::max))
}

/// Max-abs difference, up to sign, between eigenvectors of `E(A)` and
/// `basis * q*_i`, over population eigenvalues separated from all others by
/// at least `min_gap` (relative).
pub fn eigenvector_reconstruction_check(spec: &ModelSpec, min_gap: f64) -> Result<f64> {
    let pop = population(spec);
    let direct = eig_sym(pop.expected_adjacency.as_ref())?;
    let (vals, q) = pop.eigenpairs()?;
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (i, &v) in vals.iter().enumerate() {
        let isolated = vals
            .iter()
            .enumerate()
            .all(|(j, &w)| j == i || (v - w).abs() > min_gap * top)
            && v.abs() > min_gap * top;
        if !isolated {
            continue;
        }
        let j = nearest(direct.eigenvalues(), v);
        let eta = direct.eigenvectors().col(j);
        let qi = q.col(i);
        let s = if dot(qi, eta) < 0.0 { -1.0 } else { 1.0 };
        for r in 0..q.nrows() {
            worst = worst.max((eta[r] - s * qi[r]).abs());
        }
    }
    Ok(worst)
}

fn nearest(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if (v - target).abs() < (values[best] - target).abs() {
            best = i;
        }
    }
    best
}

fn dot(a: faer::ColRef<'_, f64>, b: faer::ColRef<'_, f64>) -> f64 {
    (0..a.nrows()).map(|i| a[i] * b[i]).sum()
}

/// `B = A - E(A)`, with `E(A)` the rank-`K` expansion (so the diagonal of
/// `B` carries the unit-diagonal mismatch).
pub fn noise_matrix(a: &AdjacencyMatrix, spec: &ModelSpec) -> Result<Mat<f64>> {
    if a.n() != spec.n() {
        return Err(Error::InvalidArgument(format!(
            "adjacency has {} nodes, spec has {}",
            a.n(),
            spec.n()
        )));
    }
    let m = a.as_mat();
    Ok(Mat::from_fn(a.n(), a.n(), |i, j| m[(i, j)] - spec.entry_mean(i, j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseNormReport {
    /// `||B|| / sqrt(n)`.
    pub value: f64,
    /// `2 * max_{i != j} sd(A(i,j))`.
    pub bound: f64,
    /// `max_{i,j} |B(i,j)|`.
    pub max_entry: f64,
    /// `max_entry / sqrt(n)`.
    pub max_entry_scaled: f64,
}

impl NoiseNormReport {
    pub fn within(&self, slack: f64) -> bool {
        self.value <= self.bound * (1.0 + slack)
    }
}

pub fn noise_norm(a: &AdjacencyMatrix, spec: &ModelSpec) -> Result<NoiseNormReport> {
    let b = noise_matrix(a, spec)?;
    let root_n = (a.n() as f64).sqrt();
    let mut max_entry = 0.0f64;
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            max_entry = max_entry.max(b[(i, j)].abs());
        }
    }
    Ok(NoiseNormReport {
        value: spectral_norm_sym(b.as_ref())? / root_n,
        bound: 2.0 * spec.max_offdiag_sd(),
        max_entry,
        max_entry_scaled: max_entry / root_n,
    })
}

/// Contiguous index ranges of equal eigenvalues (within
/// `tol * max(1, |gamma|)`). Eigenvalues that are zero relative to the
/// largest one are left out.
pub fn group_eigenvalues(eigenvalues: &[f64], tol: f64) -> Vec<Range<usize>> {
    let top = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let is_zero = |v: f64| v.abs() <= 1e-12 * top || v == 0.0;
    let mut groups: Vec<Range<usize>> = Vec::new();
    for (i, &v) in eigenvalues.iter().enumerate() {
        if is_zero(v) {
            continue;
        }
        match groups.last_mut() {
            Some(g) if g.end == i && (eigenvalues[g.start] - v).abs() <= tol * v.abs().max(1.0) => {
                g.end = i + 1
            }
            _ => groups.push(i..i + 1),
        }
    }
    groups
}

/// Sample eigenvectors matched to one population eigenvalue group.
#[derive(Debug, Clone)]
pub struct EigenGroup {
    /// Population indices of the group.
    pub indices: Range<usize>,
    pub gamma: f64,
    /// Sample eigenvector indices matched to the group.
    pub sample_indices: Vec<usize>,
    /// `T = Q' U`.
    pub alignment: Mat<f64>,
    /// `||U - Q T||_inf` (max absolute entry).
    pub residual: f64,
    /// `residual * n / ln n`.
    pub normalized: f64,
    /// `||T'T - I||_F`.
    pub alignment_defect: f64,
    /// For singleton groups, `max |eta - s q|` with `s = sign(q' eta)`.
    pub vector_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LinfReport {
    pub groups: Vec<EigenGroup>,
    pub max_residual: f64,
    pub normalized: f64,
    /// Some population groups (or a group and zero) are closer than
    /// [`GAP_WARN`] relative to the top eigenvalue.
    pub gap_warning: bool,
}

/// Assigns each of the leading sample eigenvalues to its nearest population
/// group value.
fn match_groups(sample: &[f64], gammas: &[f64], sizes: &[usize]) -> Result<Vec<Vec<usize>>> {
    let needed: usize = sizes.iter().sum();
    let mut out = vec![Vec::new(); gammas.len()];
    for (idx, &l) in sample.iter().enumerate().take(needed) {
        let mut order: Vec<usize> = (0..gammas.len()).collect();
        order.sort_by(|&a, &b| (gammas[a] - l).abs().total_cmp(&(gammas[b] - l).abs()));
        let first = order[0];
        if let Some(&second) = order.get(1) {
            let d1 = (gammas[first] - l).abs();
            let d2 = (gammas[second] - l).abs();
            if (d2 - d1).abs() <= 1e-12 * l.abs().max(1.0) {
                return Err(Error::AmbiguousMatching {
                    value: l,
                    first: first.min(second),
                    second: first.max(second),
                });
            }
        }
        out[first].push(idx);
    }
    for (t, (got, &want)) in out.iter().zip(sizes).enumerate() {
        if got.len() != want {
            return Err(Error::InvalidArgument(format!(
                "population group {t} (value {}) matched {} sample eigenvalues, expected {want}",
                gammas[t],
                got.len()
            )));
        }
    }
    Ok(out)
}

/// Entrywise residual of the sample leading eigenspace against the
/// population eigenvectors, group by group.
pub fn linf_residual(a: &AdjacencyMatrix, spec: &ModelSpec) -> Result<LinfReport> {
    linf_residual_from(&eig_sym(a.as_mat())?, spec)
}

pub fn linf_residual_from(sample: &SpectralDecomposition, spec: &ModelSpec) -> Result<LinfReport> {
    let n = spec.n();
    if sample.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "decomposition has dimension {}, spec has {n} nodes",
            sample.dim()
        )));
    }
    let (vals, q) = population(spec).eigenpairs()?;
    let ranges = group_eigenvalues(&vals, GROUP_TOL);
    let gammas: Vec<f64> = ranges.iter().map(|r| vals[r.start]).collect();
    let sizes: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
    let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut gap_warning = gammas.iter().any(|g| g.abs() < GAP_WARN * top);
    for (i, a) in gammas.iter().enumerate() {
        for b in &gammas[i + 1..] {
            gap_warning |= (a - b).abs() < GAP_WARN * top;
        }
    }
    if gap_warning {
        log::warn!("population eigenvalues {gammas:?} are poorly separated; residuals may not shrink");
    }
    let matched = match_groups(sample.eigenvalues(), &gammas, &sizes)?;
    let u_all = sample.eigenvectors();
    let scale = n as f64 / (n as f64).ln();
    let mut groups = Vec::with_capacity(ranges.len());
    for ((range, gamma), sample_indices) in ranges.into_iter().zip(gammas).zip(matched) {
        let m = range.len();
        let qt = q.subcols(range.start, m);
        let u = Mat::from_fn(n, m, |i, c| u_all[(i, sample_indices[c])]);
        let t = qt.transpose() * &u;
        let resid = &u - qt * &t;
        let residual = max_abs(resid.as_ref());
        let gram = t.transpose() * &t;
        let defect = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| (gram[(i, j)] - if i == j { 1.0 } else { 0.0 }).powi(2))
            .sum::<f64>()
            .sqrt();
        let vector_residual = (m == 1).then(|| {
            let s = if t[(0, 0)] < 0.0 { -1.0 } else { 1.0 };
            (0..n).map(|i| (u[(i, 0)] - s * qt[(i, 0)]).abs()).fold(0.0, f64::max)
        });
        groups.push(EigenGroup {
            indices: range,
            gamma,
            sample_indices,
            alignment: t,
            residual,
            normalized: residual * scale,
            alignment_defect: defect,
            vector_residual,
        });
    }
    let max_residual = groups.iter().map(|g| g.residual).fold(0.0, f64::max);
    Ok(LinfReport {
        groups,
        max_residual,
        normalized: max_residual * scale,
        gap_warning,
    })
}

fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheck {
    /// `(k1, k2, distinguished)` for every community pair `k1 < k2`.
    pub pairs: Vec<(usize, usize, bool)>,
}

impl RatioCheck {
    pub fn all_distinguished(&self) -> bool {
        self.pairs.iter().all(|p| p.2)
    }
}

/// For every pair of communities, looks for an eigenvector `q*_z` of the
/// reduced matrix with `q*_z(k1) / q*_z(k2) != 1`. A zero/non-zero mismatch
/// counts as distinguishing; two zeros do not.
pub fn population_ratio_check(spec: &ModelSpec) -> Result<RatioCheck> {
    let reduced = population(spec).reduced_decomposition()?;
    let v = reduced.eigenvectors();
    let k = spec.k();
    let zero = |x: f64| x.abs() <= 1e-12;
    let mut pairs = Vec::new();
    for k1 in 0..k {
        for k2 in k1 + 1..k {
            let distinguished = (0..k).any(|z| {
                let (a, b) = (v[(k1, z)], v[(k2, z)]);
                match (zero(a), zero(b)) {
                    (true, true) => false,
                    (true, false) | (false, true) => true,
                    (false, false) => (a / b - 1.0).abs() > 1e-6,
                }
            });
            pairs.push((k1, k2, distinguished));
        }
    }
    Ok(RatioCheck { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationReport {
    /// Largest distance between normalized rows in the same community.
    pub max_within: f64,
    /// Smallest distance between normalized rows in different communities.
    pub min_cross: f64,
    pub pairs_sampled: usize,
    /// Rows with zero norm, excluded from all pairs.
    pub zero_rows: usize,
}

/// Separation of the row-normalized leading `k` eigenvectors of `a` by the
/// true communities.
pub fn row_separation(a: &AdjacencyMatrix, truth: &[usize], k: usize) -> Result<SeparationReport> {
    let d = eig_sym(a.as_mat())?;
    row_separation_from(&d, truth, k)
}

pub fn row_separation_from(d: &SpectralDecomposition, truth: &[usize], k: usize) -> Result<SeparationReport> {
    let n = d.dim();
    if truth.len() != n {
        return Err(Error::LengthMismatch {
            estimated: n,
            truth: truth.len(),
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} out of range 1..={n}")));
    }
    let u = d.eigenvectors();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n);
    let mut zero_rows = 0;
    for i in 0..n {
        let row: Vec<f64> = (0..k).map(|c| u[(i, c)]).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_rows += 1;
            continue;
        }
        rows.push((truth[i], row.into_iter().map(|x| x / norm).collect()));
    }
    let mut max_within = 0.0f64;
    let mut min_cross = f64::INFINITY;
    let mut pairs = 0;
    for (i, (gi, ri)) in rows.iter().enumerate() {
        for (gj, rj) in &rows[i + 1..] {
            let dist = ri.iter().zip(rj).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            if gi == gj {
                max_within = max_within.max(dist);
            } else {
                min_cross = min_cross.min(dist);
            }
            pairs += 1;
        }
    }
    Ok(SeparationReport {
        max_within,
        min_cross,
        pairs_sampled: pairs,
        zero_rows,
    })
}

/// Whether `values` is non-increasing apart from at most `max_inversions`
/// adjacent increases, each by no more than `slack` (relative).
pub fn trend_non_increasing(values: &[f64], max_inversions: usize, slack: f64) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        if w[1] > w[0] {
            if w[1] > w[0] * (1.0 + slack) {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= max_inversions
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::square_matrix;

    fn balanced(n: usize, k: usize) -> Vec<usize> {
        (0..n).map(|i| i * k / n).collect()
    }

    #[test]
    fn transform_bm_k2() {
        let p = square_matrix(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let spec = ModelSpec::bm(balanced(200, 2), p).unwrap();
        assert!(eigen_transform_check(&spec).unwrap() <= 1e-10);
        assert!(eigenvector_reconstruction_check(&spec, 1e-6).unwrap() <= 1e-8);
    }

    #[test]
    fn transform_rank_one() {
        let spec = ModelSpec::bm(vec![0; 30], square_matrix(1, &[0.3]).unwrap()).unwrap();
        assert!(eigen_transform_check(&spec).unwrap() <= 1e-12);
    }

    #[test]
    fn grouping() {
        assert_eq!(group_eigenvalues(&[5.0, 3.0, -1.0], 0.0), vec![0..1, 1..2, 2..3]);
        assert_eq!(group_eigenvalues(&[4.0, 4.0 + 1e-12, 1.0], 1e-8), vec![0..2, 2..3]);
        assert_eq!(group_eigenvalues(&[4.0, 0.0], 1e-8), vec![0..1]);
    }

    #[test]
    fn zero_noise_repeated_eigenvalue() {
        let p = square_matrix(2, &[0.6, 0.0, 0.0, 0.6]).unwrap();
        let spec = ModelSpec::bm(balanced(40, 2), p).unwrap();
        let ea = AdjacencyMatrix::new(population(&spec).expected_adjacency).unwrap();
        let r = linf_residual(&ea, &spec).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].indices, 0..2);
        assert!(r.max_residual <= 1e-10);
        assert!(r.groups[0].alignment_defect <= 1e-10);
    }

    #[test]
    fn bm_all_zero_noise_norm() {
        let p = square_matrix(1, &[0.0]).unwrap();
        let spec = ModelSpec::bm(vec![0; 25], p).unwrap();
        let a = crate::model::generate(&spec, 3);
        let r = noise_norm(&a, &spec).unwrap();
        assert!((r.value - 1.0 / 5.0).abs() < 1e-12);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn ratio_check_small() {
        let spec = ModelSpec::bm(vec![0; 5], square_matrix(1, &[0.5]).unwrap()).unwrap();
        assert!(population_ratio_check(&spec).unwrap().pairs.is_empty());
        let p = square_matrix(2, &[0.9, 0.2, 0.2, 0.4]).unwrap();
        let spec = ModelSpec::bm(balanced(10, 2), p).unwrap();
        assert!(population_ratio_check(&spec).unwrap().all_distinguished());
    }

    #[test]
    fn trend_rule() {
        assert!(trend_non_increasing(&[4.0, 3.0, 2.0, 1.0], 1, 0.1));
        assert!(trend_non_increasing(&[4.0, 3.0, 3.2, 1.0], 1, 0.1));
        assert!(!trend_non_increasing(&[4.0, 3.0, 3.5, 1.0], 1, 0.1));
        assert!(!trend_non_increasing(&[4.0, 4.1, 4.2, 1.0], 1, 0.1));
    }

    #[test]
    fn slope_and_median() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 / v).collect();
        assert!((log_log_slope(&x, &y) + 1.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
