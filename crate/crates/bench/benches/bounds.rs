use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use drm_core::bounds::oracle::exact_rademacher;
use drm_core::bounds::{bound_report, chaining_rademacher_optimized, massart_bound};
use drm_core::{Activation, NetworkArch};

fn class_bounds(c: &mut Criterion) {
    let arch = NetworkArch::uniform(2, 4, 32, Activation::Tanh, 2.0).unwrap();
    c.bench_function("bound_report", |b| {
        b.iter(|| bound_report(black_box(&arch), 10_000, 10_000, 1.0, 1.0, 1.0).unwrap())
    });
    c.bench_function("chaining_optimized", |b| {
        b.iter(|| chaining_rademacher_optimized(3, black_box(&arch), 10_000).unwrap())
    });
}

fn finite_sets(c: &mut Criterion) {
    let set: Vec<Vec<f64>> = (0..8)
        .map(|k| {
            (0..12)
                .map(|i| ((k * 12 + i) as f64 * 0.37).sin())
                .collect()
        })
        .collect();
    c.bench_function("exact_rademacher_12x8", |b| {
        b.iter(|| exact_rademacher(black_box(&set)).unwrap())
    });
    c.bench_function("massart_12x8", |b| {
        b.iter(|| massart_bound(black_box(&set)).unwrap())
    });
}

criterion_group!(benches, class_bounds, finite_sets);
criterion_main!(benches);
