mod common;

use proptest::prelude::*;
use spectral_comm::cluster::{detect, ratio_matrix, DetectOptions, KChoice, Method};
use spectral_comm::estimate::{delta_sweep, estimate_k};
use spectral_comm::kmeans::{kmeans, KMeansConfig};
use spectral_comm::metrics::{relative_error_rate, relative_error_rate_with, MatchStrategy};
use spectral_comm::model::{generate, square_matrix, ModelSpec};
use spectral_comm::spectral::{eig_sym, leading_eigenspace, spectral_order};
use spectral_comm::Mat;

fn symmetric(n: usize, vals: &[f64]) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(n, n);
    let mut it = vals.iter().cycle();
    for i in 0..n {
        for j in i..n {
            let v = *it.next().unwrap();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kmeans_objective_never_increases(
        seed in any::<u64>(),
        n in 6usize..60,
        k in 2usize..5,
        coords in prop::collection::vec(-5.0f64..5.0, 120),
    ) {
        let pts = Mat::from_fn(n, 2, |i, j| coords[(2 * i + j) % coords.len()] + i as f64 * 1e-3);
        let r = kmeans(pts.as_ref(), k, &KMeansConfig { restarts: 3, ..Default::default() }, seed).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "history {:?}", r.history);
        }
        let counts = (0..k).map(|c| r.labels.iter().filter(|&&l| l == c).count());
        prop_assert!(counts.into_iter().all(|c| c > 0));
    }

    #[test]
    fn eigen_order_and_residuals(n in 1usize..30, vals in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let m = symmetric(n, &vals);
        let d = eig_sym(m.as_ref()).unwrap();
        let l = d.eigenvalues();
        for w in l.windows(2) {
            prop_assert!(spectral_order(w[0], w[1]) != std::cmp::Ordering::Greater);
        }
        let v = d.eigenvectors();
        let av = &m * v;
        for c in 0..n {
            let norm: f64 = (0..n).map(|i| v[(i, c)] * v[(i, c)]).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-10);
            let res: f64 = (0..n).map(|i| (av[(i, c)] - l[c] * v[(i, c)]).powi(2)).sum::<f64>().sqrt();
            prop_assert!(res <= 1e-8 * l[c].abs().max(1.0));
            // Canonical sign: the largest-magnitude entry is non-negative.
            let big = (0..n).fold(0, |b, i| if v[(i, c)].abs() > v[(b, c)].abs() { i } else { b });
            prop_assert!(v[(big, c)] >= 0.0);
        }
        let again = eig_sym(m.as_ref()).unwrap();
        prop_assert_eq!(d.eigenvalues(), again.eigenvalues());
    }

    #[test]
    fn k_hat_monotone_in_delta(vals in prop::collection::vec(-50.0f64..50.0, 5..80)) {
        let mut l = vals.clone();
        l.sort_by(|a, b| spectral_order(*a, *b));
        let n = l.len();
        let deltas: Vec<f64> = (0..13).map(|i| 0.02 + 0.002 * i as f64).collect();
        let sweep = delta_sweep(&l, n, &deltas).unwrap();
        for w in sweep.windows(2) {
            prop_assert!(w[1].1.k_hat <= w[0].1.k_hat);
        }
        for (_, est) in &sweep {
            // Qualifying indices form a prefix.
            let t = est.threshold;
            prop_assert!(est.ratios.iter().take(est.k_hat).all(|&r| r > t));
            prop_assert!(est.ratios.iter().skip(est.k_hat).all(|&r| r <= t));
        }
    }

    #[test]
    fn k_hat_scale_invariant(vals in prop::collection::vec(-50.0f64..50.0, 5..80), c in 0.01f64..100.0, delta in 0.001f64..0.5) {
        let mut l = vals.clone();
        l.sort_by(|a, b| spectral_order(*a, *b));
        let t = delta * (l.len() as f64).powf(0.75);
        let scaled: Vec<f64> = l.iter().map(|v| v * c).collect();
        let a = estimate_k(&l, t);
        let b = estimate_k(&scaled, t);
        prop_assert_eq!(a.k_hat, b.k_hat);
    }

    #[test]
    fn assignment_matches_brute_force(
        kt in 1usize..=6,
        ke in 1usize..=6,
        raw in prop::collection::vec((0usize..6, 0usize..6), 30),
    ) {
        let truth: Vec<usize> = raw.iter().map(|p| p.0 % kt).collect();
        let est: Vec<usize> = raw.iter().map(|p| p.1 % ke).collect();
        let a = relative_error_rate_with(&est, &truth, MatchStrategy::Assignment).unwrap();
        let b = relative_error_rate_with(&est, &truth, MatchStrategy::BruteForce).unwrap();
        prop_assert_eq!(a.error_rate, b.error_rate);
        prop_assert!((0.0..=1.0).contains(&a.error_rate));
        // Averaging over cyclic label shifts: the best map matches >= n/m.
        let m = kt.max(ke) as f64;
        prop_assert!(a.matched as f64 >= 30.0 / m);
    }

    #[test]
    fn generated_matrices_symmetric(seed in any::<u64>(), kind in 0usize..3) {
        let mut r = common::rng(seed);
        let spec = common::random_spec(&mut r, kind, 4, 5..=40);
        let a = generate(&spec, seed);
        prop_assert!(a.has_unit_diagonal());
        let m = a.as_mat();
        for i in 0..a.n() {
            for j in 0..a.n() {
                prop_assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
        if kind < 2 {
            prop_assert!(a.is_binary());
        }
        prop_assert_eq!(&a, &generate(&spec, seed));
    }
}

fn planted(n: usize, seed: u64) -> (spectral_comm::AdjacencyMatrix, Vec<usize>) {
    let g = common::balanced(n, 2);
    let spec = ModelSpec::bm(g.clone(), square_matrix(2, &[0.9, 0.1, 0.1, 0.8]).unwrap()).unwrap();
    (generate(&spec, seed), g)
}

#[test]
fn scdre_sign_flip_invariant() {
    let (a, _) = planted(80, 3);
    let u = leading_eigenspace(&eig_sym(a.as_mat()).unwrap(), 2).unwrap();
    let cfg = KMeansConfig::default();
    let base = kmeans(ratio_matrix(u.as_ref()).unwrap().pi.as_ref(), 2, &cfg, 4).unwrap();
    for flip in [[-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]] {
        let flipped = Mat::from_fn(u.nrows(), 2, |i, j| flip[j] * u[(i, j)]);
        let r = kmeans(ratio_matrix(flipped.as_ref()).unwrap().pi.as_ref(), 2, &cfg, 4).unwrap();
        assert_eq!(r.labels, base.labels);
    }
}

#[test]
fn scdre_relabeling_equivariant() {
    let (a, _) = planted(90, 5);
    let perm: Vec<usize> = (0..90).map(|i| (i * 37 + 11) % 90).collect();
    let opts = DetectOptions::default();
    let base = detect(&a, Method::Scdre, KChoice::Fixed(2), &opts, 2).unwrap();
    let moved = detect(&a.permuted(&perm), Method::Scdre, KChoice::Fixed(2), &opts, 2).unwrap();
    // Node i of the permuted graph is node perm[i] of the original.
    let pulled: Vec<usize> = (0..90).map(|i| base.labels[perm[i]]).collect();
    assert_eq!(relative_error_rate(&moved.labels, &pulled).unwrap().error_rate, 0.0);
}
