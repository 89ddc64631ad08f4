//! Relative error rate: the fraction of misclassified nodes under the best
//! matching between estimated and true labels.
//!
//! When the numbers of estimated and true labels differ, the matching is
//! injective on `min(K, K_hat)` labels and nodes carrying an unmatched
//! estimated label all count as errors.

use itertools::Itertools;

use crate::error::{Error, Result};

/// Largest label-alphabet size solved by enumerating permutations.
pub const BRUTE_FORCE_MAX_LABELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchStrategy {
    /// Brute force up to [`BRUTE_FORCE_MAX_LABELS`], assignment beyond.
    Auto,
    BruteForce,
    Assignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub error_rate: f64,
    pub matched: usize,
    /// `best_permutation[e]` is the true label matched to estimated label `e`.
    pub best_permutation: Vec<Option<usize>>,
    /// `confusion[t][e]` counts nodes with true label `t` and estimate `e`.
    pub confusion: Vec<Vec<usize>>,
}

pub fn confusion_matrix(estimated: &[usize], truth: &[usize]) -> Vec<Vec<usize>> {
    let kt = truth.iter().max().map_or(0, |m| m + 1);
    let ke = estimated.iter().max().map_or(0, |m| m + 1);
    let mut c = vec![vec![0usize; ke]; kt];
    for (&e, &t) in estimated.iter().zip(truth) {
        c[t][e] += 1;
    }
    c
}

/// Square `m x m` score matrix `w[e][t]` padded with zeros.
fn padded_scores(confusion: &[Vec<usize>]) -> (usize, Vec<Vec<i64>>) {
    let kt = confusion.len();
    let ke = confusion.first().map_or(0, |r| r.len());
    let m = kt.max(ke);
    let mut w = vec![vec![0i64; m]; m];
    for (t, row) in confusion.iter().enumerate() {
        for (e, &c) in row.iter().enumerate() {
            w[e][t] = c as i64;
        }
    }
    (m, w)
}

fn brute_force(w: &[Vec<i64>]) -> Vec<usize> {
    let m = w.len();
    let mut best = (0..m).collect::<Vec<_>>();
    let mut best_score = -1;
    for perm in (0..m).permutations(m) {
        let s: i64 = perm.iter().enumerate().map(|(e, &t)| w[e][t]).sum();
        if s > best_score {
            best_score = s;
            best = perm;
        }
    }
    best
}

/// Hungarian method (shortest augmenting paths with potentials) on a
/// square cost matrix; returns `assignment[row] = column` minimising cost.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let m = cost.len();
    if m == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0i64; m + 1];
    let mut v = vec![0i64; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=m {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; m];
    for j in 1..=m {
        if col_owner[j] > 0 {
            assignment[col_owner[j] - 1] = j - 1;
        }
    }
    assignment
}

fn assignment(w: &[Vec<i64>]) -> Vec<usize> {
    let max = w.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = w.iter().map(|r| r.iter().map(|&x| max - x).collect()).collect();
    min_cost_assignment(&cost)
}

pub fn relative_error_rate(estimated: &[usize], truth: &[usize]) -> Result<ErrorReport> {
    relative_error_rate_with(estimated, truth, MatchStrategy::Auto)
}

pub fn relative_error_rate_with(
    estimated: &[usize],
    truth: &[usize],
    strategy: MatchStrategy,
) -> Result<ErrorReport> {
    if estimated.len() != truth.len() {
        return Err(Error::LengthMismatch {
            estimated: estimated.len(),
            truth: truth.len(),
        });
    }
    let n = truth.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty label vectors".into()));
    }
    let confusion = confusion_matrix(estimated, truth);
    let kt = confusion.len();
    let ke = confusion[0].len();
    let (m, w) = padded_scores(&confusion);
    let use_brute = match strategy {
        MatchStrategy::Auto => m <= BRUTE_FORCE_MAX_LABELS,
        MatchStrategy::BruteForce => true,
        MatchStrategy::Assignment => false,
    };
    let perm = if use_brute { brute_force(&w) } else { assignment(&w) };
    let matched: usize = perm.iter().enumerate().map(|(e, &t)| w[e][t] as usize).sum();
    let best_permutation = (0..ke).map(|e| (perm[e] < kt).then_some(perm[e])).collect();
    debug_assert!(m >= ke);
    Ok(ErrorReport {
        error_rate: (n - matched) as f64 / n as f64,
        matched,
        best_permutation,
        confusion,
    })
}
