//! Lloyd's k-means with k-means++ seeding and restarts.

use faer::MatRef;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 20,
            max_iters: 300,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of `labels`.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

struct Points {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Points {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Within-cluster sum of squares of an arbitrary labelling.
pub fn objective(points: MatRef<'_, f64>, labels: &[usize], k: usize) -> f64 {
    let p = to_points(points);
    let centers = centroids(&p, labels, k);
    (0..p.n)
        .map(|i| sq_dist(p.row(i), &centers[labels[i] * p.d..(labels[i] + 1) * p.d]))
        .sum()
}

fn to_points(m: MatRef<'_, f64>) -> Points {
    let (n, d) = (m.nrows(), m.ncols());
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            data.push(m[(i, j)]);
        }
    }
    Points { data, n, d }
}

fn centroids(p: &Points, labels: &[usize], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k * p.d];
    let mut counts = vec![0usize; k];
    for i in 0..p.n {
        let c = labels[i];
        counts[c] += 1;
        for (s, x) in sums[c * p.d..(c + 1) * p.d].iter_mut().zip(p.row(i)) {
            *s += x;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            sums[c * p.d..(c + 1) * p.d].iter_mut().for_each(|s| *s *= inv);
        }
    }
    sums
}

fn plus_plus<R: Rng>(p: &Points, k: usize, rng: &mut R) -> Vec<f64> {
    let mut centers = Vec::with_capacity(k * p.d);
    let first = rng.random_range(0..p.n);
    centers.extend_from_slice(p.row(first));
    let mut dist: Vec<f64> = (0..p.n).map(|i| sq_dist(p.row(i), p.row(first))).collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = p.n - 1;
            for (i, &w) in dist.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..p.n)
        };
        centers.extend_from_slice(p.row(pick));
        for i in 0..p.n {
            dist[i] = dist[i].min(sq_dist(p.row(i), p.row(pick)));
        }
    }
    centers
}

fn assign(p: &Points, centers: &[f64], k: usize, labels: &mut [usize]) {
    for i in 0..p.n {
        let row = p.row(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = sq_dist(row, &centers[c * p.d..(c + 1) * p.d]);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        labels[i] = best;
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(p: &Points, labels: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&c| counts[c] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let centers = centroids(p, labels, k);
        let mut donor = None;
        let mut far = -1.0;
        for i in 0..p.n {
            let c = labels[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(p.row(i), &centers[c * p.d..(c + 1) * p.d]);
            if d > far {
                far = d;
                donor = Some(i);
            }
        }
        let donor = donor.expect("k <= n guarantees a cluster with two points");
        labels[donor] = empty;
    }
}

fn sse(p: &Points, labels: &[usize], centers: &[f64]) -> f64 {
    (0..p.n)
        .map(|i| sq_dist(p.row(i), &centers[labels[i] * p.d..(labels[i] + 1) * p.d]))
        .sum()
}

fn lloyd<R: Rng>(p: &Points, k: usize, cfg: &KMeansConfig, rng: &mut R) -> KMeansResult {
    let mut centers = plus_plus(p, k, rng);
    let mut labels = vec![0usize; p.n];
    let mut history = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        assign(p, &centers, k, &mut labels);
        repair_empty(p, &mut labels, k);
        centers = centroids(p, &labels, k);
        let obj = sse(p, &labels, &centers);
        let converged = prev.as_ref() == Some(&labels)
            || history
                .last()
                .is_some_and(|&last: &f64| (last - obj) <= cfg.tol * last.abs().max(f64::MIN_POSITIVE));
        history.push(obj);
        if converged {
            break;
        }
        prev = Some(labels.clone());
    }
    KMeansResult {
        objective: *history.last().expect("at least one iteration"),
        labels,
        iterations,
        history,
    }
}

/// Clusters the rows of `points` into `k` groups, keeping the best of
/// `cfg.restarts` k-means++ starts. Deterministic for a given seed.
pub fn kmeans(points: MatRef<'_, f64>, k: usize, cfg: &KMeansConfig, seed: u64) -> Result<KMeansResult> {
    let (n, d) = (points.nrows(), points.ncols());
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k-means with k={k} on {n} points")));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("k-means needs at least one dimension".into()));
    }
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(Error::InvalidArgument("k-means restarts and max_iters must be positive".into()));
    }
    let p = to_points(points);
    if p.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut rng = stream_rng(seed, Stream::KMeans);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..cfg.restarts {
        let run = lloyd(&p, k, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn separated_clouds() {
        let offsets = [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (-0.1, 0.0)];
        let pts = Mat::from_fn(8, 2, |i, j| {
            let base = if i < 4 { 0.0 } else { 10.0 };
            let o = offsets[i % 4];
            base + if j == 0 { o.0 } else { o.1 }
        });
        let r = kmeans(pts.as_ref(), 2, &KMeansConfig::default(), 1).unwrap();
        assert!(r.labels[..4].iter().all(|&l| l == r.labels[0]));
        assert!(r.labels[4..].iter().all(|&l| l == r.labels[4]));
        assert_ne!(r.labels[0], r.labels[4]);
        // Centroid (-0.0, 0.025) per cloud: scatter = 2 * sum of squared offsets.
        let centroid = (0.0, 0.025);
        let scatter: f64 = offsets
            .iter()
            .map(|o| (o.0 - centroid.0).powi(2) + (o.1 - centroid.1).powi(2))
            .sum();
        assert!((r.objective - 2.0 * scatter).abs() < 1e-12);
    }

    #[test]
    fn identical_points() {
        let pts = Mat::from_fn(5, 3, |_, j| j as f64);
        let r = kmeans(pts.as_ref(), 1, &KMeansConfig::default(), 0).unwrap();
        assert_eq!(r.objective, 0.0);
        // More clusters than distinct points still yields k non-empty clusters.
        let r = kmeans(pts.as_ref(), 3, &KMeansConfig::default(), 0).unwrap();
        let mut counts = [0; 3];
        r.labels.iter().for_each(|&l| counts[l] += 1);
        assert!(counts.iter().all(|&c| c > 0));
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let pts = Mat::from_fn(3, 1, |i, _| i as f64);
        assert!(kmeans(pts.as_ref(), 0, &KMeansConfig::default(), 0).is_err());
        assert!(kmeans(pts.as_ref(), 4, &KMeansConfig::default(), 0).is_err());
        let empty = Mat::<f64>::zeros(3, 0);
        assert!(kmeans(empty.as_ref(), 1, &KMeansConfig::default(), 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let pts = Mat::from_fn(60, 2, |i, j| ((i * 37 + j * 11) % 17) as f64);
        let a = kmeans(pts.as_ref(), 4, &KMeansConfig::default(), 5).unwrap();
        let b = kmeans(pts.as_ref(), 4, &KMeansConfig::default(), 5).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.objective, b.objective);
    }
}
