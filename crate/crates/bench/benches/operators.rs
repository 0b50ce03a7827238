use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ipszeta::spectrum::{eig_dense, EigOptions};
use ipszeta::{
    apply_matrix_free, build_global_kronecker, build_global_recursive, estimate_survival,
    power_traces, DkParams,
};
use ipszeta_bench::{bench_caps, dense, dk, random_general, random_state};

fn construction(c: &mut Criterion) {
    let caps = bench_caps();
    let local = random_general(1);
    let mut group = c.benchmark_group("build");
    for n in [6usize, 8, 10] {
        group.bench_with_input(BenchmarkId::new("recursive", n), &n, |b, &n| {
            b.iter(|| build_global_recursive(black_box(&local), n, &caps).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("kronecker", n), &n, |b, &n| {
            b.iter(|| build_global_kronecker(black_box(&local), n, &caps).unwrap())
        });
    }
    group.finish();
}

fn matrix_free(c: &mut Criterion) {
    let local = dk(0.3, 0.8);
    let mut group = c.benchmark_group("apply_matrix_free");
    group.sample_size(20);
    for n in [12usize, 16, 20] {
        let v = random_state(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| apply_matrix_free(black_box(&local), n, &v).unwrap())
        });
    }
    group.finish();
}

fn eigensolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("eig_dense");
    group.sample_size(10);
    for n in [6usize, 8] {
        let m = dense(&dk(0.4, 0.7), n);
        let opts = EigOptions {
            max_dim: 1 << n,
            ..EigOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| eig_dense(black_box(&m), &opts).unwrap())
        });
    }
    group.finish();
}

fn traces(c: &mut Criterion) {
    let caps = bench_caps();
    let local = random_general(3);
    c.bench_function("power_traces n=10 r=30", |b| {
        b.iter(|| power_traces(black_box(&local), 10, 30, &caps).unwrap())
    });
}

fn survival(c: &mut Criterion) {
    let params = DkParams::new(0.7, 0.9).unwrap();
    let mut group = c.benchmark_group("estimate_survival");
    group.sample_size(10);
    group.bench_function("T=200 trials=1000", |b| {
        b.iter(|| estimate_survival(black_box(params), &[0], 200, 1_000, 5).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    construction,
    matrix_free,
    eigensolve,
    traces,
    survival
);
criterion_main!(benches);
