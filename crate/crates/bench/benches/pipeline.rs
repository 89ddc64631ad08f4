use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spectral_comm::cluster::{ratio_matrix, scdre, DetectOptions};
use spectral_comm::kmeans::{kmeans, KMeansConfig};
use spectral_comm::metrics::relative_error_rate;
use spectral_comm::spectral::{eig_sym, eigenvalues_sym, leading_eigenspace};
use spectral_comm::KChoice;
use spectral_comm_bench::dcbm_sample;

fn eigensolver(c: &mut Criterion) {
    let mut g = c.benchmark_group("eig_sym");
    g.sample_size(10);
    for n in [250, 500, 1000] {
        let (_, a) = dcbm_sample(n, 1);
        g.bench_with_input(BenchmarkId::new("vectors", n), &a, |b, a| b.iter(|| eig_sym(black_box(a.as_mat()))));
        g.bench_with_input(BenchmarkId::new("values", n), &a, |b, a| {
            b.iter(|| eigenvalues_sym(black_box(a.as_mat())))
        });
    }
    g.finish();
}

fn clustering(c: &mut Criterion) {
    let (spec, a) = dcbm_sample(1000, 2);
    let u = leading_eigenspace(&eig_sym(a.as_mat()).unwrap(), 2).unwrap();
    let pi = ratio_matrix(u.as_ref()).unwrap().pi;
    c.bench_function("ratio_matrix/1000", |b| b.iter(|| ratio_matrix(black_box(u.as_ref()))));
    c.bench_function("kmeans/1000x2", |b| {
        b.iter(|| kmeans(black_box(pi.as_ref()), 2, &KMeansConfig::default(), 3))
    });
    let labels = kmeans(pi.as_ref(), 2, &KMeansConfig::default(), 3).unwrap().labels;
    c.bench_function("relative_error_rate/1000", |b| {
        b.iter(|| relative_error_rate(black_box(&labels), spec.membership()))
    });

    let mut g = c.benchmark_group("scdre_end_to_end");
    g.sample_size(10);
    for n in [250, 500] {
        let (_, a) = dcbm_sample(n, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| scdre(black_box(a), KChoice::Fixed(2), &DetectOptions::default(), 5))
        });
    }
    g.finish();
}

criterion_group!(benches, eigensolver, clustering);
criterion_main!(benches);
