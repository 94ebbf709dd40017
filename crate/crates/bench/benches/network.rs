use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use drm_bench::fixture;
use drm_core::network::{forward_with_input_grad, loss_param_gradient};
use drm_core::ritz::empirical_loss;

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_with_input_grad");
    for width in [8, 16, 32] {
        let f = fixture("gauss2d_robin", 3, width, 1);
        group.bench_with_input(BenchmarkId::from_parameter(width), &f, |b, f| {
            b.iter(|| forward_with_input_grad(&f.arch, &f.params, black_box(&[0.3, 0.7])).unwrap())
        });
    }
    group.finish();
}

fn loss_and_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_param_gradient");
    for n in [256, 1024] {
        let f = fixture("sin1d_robin", 3, 16, n);
        group.bench_with_input(BenchmarkId::new("loss", n), &f, |b, f| {
            b.iter(|| empirical_loss(&f.arch, &f.params, &f.batch, &f.problem).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", n), &f, |b, f| {
            b.iter(|| loss_param_gradient(&f.arch, &f.params, &f.batch, &f.problem).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward, loss_and_gradient);
criterion_main!(benches);
