use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vnfscale_core::oracle::solve_global;
use vnfscale_core::{solve_stationary, ModelParams};

fn recursion_vs_capacity(c: &mut Criterion) {
    let mut group = c.benchmark_group("recursion");
    for capacity in [250usize, 500, 1000, 2000] {
        let m = ModelParams::new(150.0, 1.0, 0.005, 0.01, 110, 100, capacity);
        group.bench_with_input(BenchmarkId::from_parameter(capacity), &m, |b, m| {
            b.iter(|| solve_stationary(black_box(m)).unwrap())
        });
    }
    group.finish();
}

fn recursion_vs_dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("small_instance");
    let m = ModelParams::new(4.0, 1.0, 0.5, 0.2, 3, 4, 20);
    group.bench_function("recursion", |b| b.iter(|| solve_stationary(black_box(&m)).unwrap()));
    group.bench_function("dense", |b| b.iter(|| solve_global(black_box(&m)).unwrap()));
    group.finish();
}

criterion_group!(benches, recursion_vs_capacity, recursion_vs_dense);
criterion_main!(benches);
