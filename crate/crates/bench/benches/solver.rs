use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use strucrank::bench::{bench_problem, time_size, BenchConfig};
use strucrank::linalg::top_singular_pair;
use strucrank::FactorPair;
use strucrank_bench::sizes;

fn gcg_iterations(c: &mut Criterion) {
    let mut group = c.benchmark_group("gcgls_5_iters");
    group.sample_size(10);
    let config = BenchConfig {
        iters: 5,
        reps: 1,
        ..BenchConfig::default()
    };
    for size in sizes() {
        group.throughput(Throughput::Elements(size.mn() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size.mn()), &size, |b, &s| {
            b.iter(|| time_size(black_box(s), &config).unwrap())
        });
    }
    group.finish();
}

fn top_pair_of_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("top_singular_pair");
    for size in sizes() {
        let prob = bench_problem(size, 0).unwrap();
        let eval = prob
            .evaluate_factors(&FactorPair::ones(prob.rows(), prob.cols()))
            .unwrap();
        let g = -prob.gradient(&eval);
        group.throughput(Throughput::Elements(size.mn() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size.mn()), &g, |b, g| {
            b.iter(|| top_singular_pair(black_box(g), 1e-8, 500, 0).unwrap())
        });
    }
    group.finish();
}

fn recovery_spmv(c: &mut Criterion) {
    let mut group = c.benchmark_group("c_spmv");
    for size in sizes() {
        let prob = bench_problem(size, 0).unwrap();
        let x = vec![1.0; prob.size()];
        group.throughput(Throughput::Elements(size.mn() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size.mn()), &x, |b, x| {
            b.iter(|| prob.c().spmv(black_box(x)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gcg_iterations, top_pair_of_gradient, recovery_spmv);
criterion_main!(benches);
