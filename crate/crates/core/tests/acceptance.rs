//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers (e.g. `3 7`) to run
//! a subset.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use spectral_comm::cluster::{detect, DetectOptions, KChoice, Method};
use spectral_comm::experiment::{run_experiment, ExperimentReport, Preset};
use spectral_comm::io::{read_edge_list, read_labels, DiagonalPolicy, Indexing};
use spectral_comm::metrics::{relative_error_rate_with, MatchStrategy};
use spectral_comm::model::{generate, population, square_matrix, AdjacencyMatrix, ModelSpec};
use spectral_comm::rng::repetition_seed;
use spectral_comm::spectral::eig_sym;
use spectral_comm::theory::{
    eigen_transform_check, linf_residual, linf_residual_from, median, noise_norm, population_ratio_check,
    row_separation, row_separation_from, trend_non_increasing,
};

use common::{balanced, random_spec, rng};
use rand::Rng;

const REPS: usize = 100;
const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn one(reports: Vec<ExperimentReport>) -> ExperimentReport {
    reports.into_iter().next().expect("one report")
}

fn k_estimator() -> Outcome {
    let mut pass = true;
    let mut cells = Vec::new();
    for n in [400, 1000] {
        for k in [2, 3] {
            let spec = Preset::Exp1.spec(n, k, &[]).unwrap();
            let r = one(run_experiment(&spec, REPS, SEED).unwrap());
            let correct = r.values().filter(|&v| v == k as f64).count();
            pass &= correct >= 99;
            cells.push(format!("n={n} K={k}: {correct}/{REPS}"));
        }
    }
    outcome(pass, format!("{} (need >= 99 each)", cells.join(", ")))
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn error_mean(preset: Preset, k: usize, methods: &[Method]) -> Vec<ExperimentReport> {
    let spec = preset.spec(1000, k, methods).unwrap();
    run_experiment(&spec, REPS, SEED).unwrap()
}

fn describe(r: &ExperimentReport) -> String {
    format!("{} mean {:.4} (sd {:.4}, flagged {})", r.label, r.mean, r.sd, r.flagged)
}

fn scdre_bm() -> Outcome {
    let k2 = one(error_mean(Preset::Exp2, 2, &[Method::Scdre]));
    let k3 = one(error_mean(Preset::Exp2, 3, &[Method::Scdre]));
    let pass = in_range(k2.mean, 0.031, 0.085) && in_range(k3.mean, 0.0, 0.261) && k2.flagged + k3.flagged == 0;
    outcome(
        pass,
        format!("K=2 {} in [0.031, 0.085]; K=3 {} in [0, 0.261]", describe(&k2), describe(&k3)),
    )
}

fn scdre_vs_opca() -> Outcome {
    let r = error_mean(Preset::Exp3, 2, &[Method::Scdre, Method::Opca]);
    let (s, o) = (&r[0], &r[1]);
    let pass = in_range(s.mean, 0.049, 0.097) && o.mean >= 0.2 && s.flagged + o.flagged == 0;
    outcome(pass, format!("{} in [0.049, 0.097]; {} >= 0.2", describe(s), describe(o)))
}

fn heterogeneity() -> Outcome {
    let c1 = one(error_mean(Preset::Exp4 { case: 1 }, 3, &[Method::Scdre]));
    let c3 = one(error_mean(Preset::Exp4 { case: 3 }, 3, &[Method::Scdre]));
    let pass = in_range(c1.mean, 0.006, 0.036) && in_range(c3.mean, 0.12, 0.19) && c1.flagged + c3.flagged == 0;
    outcome(
        pass,
        format!("case 1 {} in [0.006, 0.036]; case 3 {} in [0.12, 0.19]", describe(&c1), describe(&c3)),
    )
}

fn transform_identity() -> Outcome {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let spec = random_spec(&mut r, i % 3, 5, 30..=300);
        worst = worst.max(eigen_transform_check(&spec).unwrap());
    }
    outcome(worst <= 1e-8, format!("max relative deviation {worst:.2e} over 20 specs (<= 1e-8)"))
}

fn zero_noise() -> Outcome {
    let exp3 = Preset::Exp3.template(500, 2).unwrap().instantiate(SEED).unwrap();
    let exp4 = Preset::Exp4 { case: 3 }.template(300, 3).unwrap().instantiate(SEED).unwrap();
    // Equal diagonal blocks: one repeated population eigenvalue.
    let repeated = ModelSpec::bm(balanced(200, 2), square_matrix(2, &[0.7, 0.0, 0.0, 0.7]).unwrap()).unwrap();
    let mut resid = 0.0f64;
    let mut within = 0.0f64;
    let mut cross_dev = 0.0f64;
    for spec in [&exp3, &exp4, &repeated] {
        let ea = AdjacencyMatrix::new(population(spec).expected_adjacency).unwrap();
        resid = resid.max(linf_residual(&ea, spec).unwrap().max_residual);
        let sep = row_separation(&ea, spec.membership(), spec.k()).unwrap();
        within = within.max(sep.max_within);
        cross_dev = cross_dev.max((sep.min_cross - 2f64.sqrt()).abs());
    }
    let pass = resid <= 1e-8 && within <= 1e-8 && cross_dev <= 1e-8;
    outcome(
        pass,
        format!("linf residual {resid:.2e}, max_within {within:.2e}, |min_cross - sqrt 2| {cross_dev:.2e} (all <= 1e-8)"),
    )
}

fn rate_trends() -> Outcome {
    let ns = [250, 500, 1000, 2000];
    let mut linf = Vec::new();
    let mut within = Vec::new();
    for (cell, &n) in ns.iter().enumerate() {
        let template = Preset::Exp1.template(n, 2).unwrap();
        let base = SEED + 1000 * cell as u64;
        let rows: Vec<(f64, f64)> = (0..20)
            .into_par_iter()
            .map(|r| {
                let seed = repetition_seed(base, r);
                let spec = template.instantiate(seed).unwrap();
                let a = generate(&spec, seed);
                let d = eig_sym(a.as_mat()).unwrap();
                let l = linf_residual_from(&d, &spec).unwrap().normalized;
                let sep = row_separation_from(&d, spec.membership(), 2).unwrap();
                (l, sep.max_within * (n as f64).sqrt() / (n as f64).ln())
            })
            .collect();
        linf.push(median(&rows.iter().map(|r| r.0).collect::<Vec<_>>()));
        within.push(median(&rows.iter().map(|r| r.1).collect::<Vec<_>>()));
    }
    let pass = trend_non_increasing(&linf, 1, 0.10) && trend_non_increasing(&within, 1, 0.10);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "n={ns:?}: linf*n/ln n medians [{}], max_within*sqrt(n)/ln n medians [{}]",
            fmt(&linf),
            fmt(&within)
        ),
    )
}

fn noise_bound() -> Outcome {
    let single = ModelSpec::bm(vec![0; 1000], square_matrix(1, &[0.5]).unwrap()).unwrap();
    let exp3 = Preset::Exp3.template(1000, 2).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, which) in [("BM p=0.5", 0), ("exp3 DCBM", 1)] {
        let worst = (0..50u64)
            .into_par_iter()
            .map(|s| {
                let seed = SEED + s;
                let spec = if which == 0 { single.clone() } else { exp3.instantiate(seed).unwrap() };
                let r = noise_norm(&generate(&spec, seed), &spec).unwrap();
                (r.value / r.bound, r.within(0.15))
            })
            .collect::<Vec<_>>();
        let ok = worst.iter().all(|w| w.1);
        let max_ratio = worst.iter().map(|w| w.0).fold(0.0, f64::max);
        pass &= ok;
        parts.push(format!("{name}: max ||B||/sqrt(n) / (2 maxsd) = {max_ratio:.4}"));
    }
    outcome(pass, format!("{} over 50 seeds (<= 1.15)", parts.join("; ")))
}

fn metric_oracle() -> Outcome {
    let mut r = rng(9);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let kt = r.random_range(1..=6);
        let ke = r.random_range(1..=6);
        let truth: Vec<usize> = (0..30).map(|_| r.random_range(0..kt)).collect();
        let est: Vec<usize> = (0..30).map(|_| r.random_range(0..ke)).collect();
        let a = relative_error_rate_with(&est, &truth, MatchStrategy::Assignment).unwrap();
        let b = relative_error_rate_with(&est, &truth, MatchStrategy::BruteForce).unwrap();
        if a.error_rate != b.error_rate {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches in 1000 instances"))
}

fn karate() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let a = read_edge_list(&dir.join("karate_edges.txt"), Indexing::One, DiagonalPolicy::ForceOnes).unwrap();
    let truth = read_labels(&dir.join("karate_labels.txt")).unwrap();
    let r = detect(&a, Method::Scdre, KChoice::Fixed(2), &DetectOptions::default(), SEED).unwrap();
    let e = spectral_comm::metrics::relative_error_rate(&r.labels, &truth.labels).unwrap();
    let errors = a.n() - e.matched;
    outcome(errors == 0, format!("SCDRE errors {errors}/{}", a.n()))
}

fn distinguishability() -> Outcome {
    let mut specs = Vec::new();
    for (preset, ks) in [
        (Preset::Exp1, &[2, 3][..]),
        (Preset::Exp2, &[2, 3]),
        (Preset::Exp3, &[2, 3]),
        (Preset::Exp4 { case: 1 }, &[3]),
        (Preset::Exp4 { case: 2 }, &[3]),
        (Preset::Exp4 { case: 3 }, &[3]),
    ] {
        for &k in ks {
            specs.push(preset.template(1000, k).unwrap().instantiate(SEED).unwrap());
        }
    }
    let n_experiment = specs.len();
    let mut r = rng(11);
    for i in 0..50 {
        specs.push(random_spec(&mut r, i % 3, 5, 20..=200));
    }
    let failed = specs
        .iter()
        .filter(|s| !population_ratio_check(s).unwrap().all_distinguished())
        .count();
    outcome(
        failed == 0,
        format!("{failed} failures over {n_experiment} experiment specs and 50 random specs"),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "K estimator, 100 reps per cell", k_estimator),
        (2, "SCDRE on BM", scdre_bm),
        (3, "SCDRE vs oPCA on DCBM", scdre_vs_opca),
        (4, "heterogeneity stress", heterogeneity),
        (5, "eigenvalue transformation identity", transform_identity),
        (6, "zero-noise identities", zero_noise),
        (7, "rate trends over n", rate_trends),
        (8, "noise-norm bound", noise_bound),
        (9, "metric oracle", metric_oracle),
        (10, "karate smoke test", karate),
        (11, "population distinguishability", distinguishability),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} [{id:>2}] {name}: {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
