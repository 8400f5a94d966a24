//! Parallel vs sequential microbenchmarks for the data-parallel kernels.
//!
//! With the default `parallel` feature, `gradient`/`phi1`/`solve_spectral`
//! run on rayon and the `_seq` twins are the sequential fallback bodies;
//! both are benched side by side. Built with `--no-default-features` the
//! pairs collapse to the same sequential code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use relief_core::{
    divergence, divergence_seq, gradient, gradient_seq, phi1, phi1_seq,
    reconstruct_from_gradients, reconstruct_from_gradients_seq, scene, MaskField, PhiMode,
};

fn bench_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group("gradient");
    for n in [256usize, 1024] {
        let (h, _) = scene::box_on_plane(n).unwrap();
        group.bench_with_input(BenchmarkId::new("par", n), &h, |b, h| {
            b.iter(|| gradient(h))
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &h, |b, h| {
            b.iter(|| gradient_seq(h))
        });
    }
    group.finish();
}

fn bench_phi1(c: &mut Criterion) {
    let mut group = c.benchmark_group("phi1");
    for n in [256usize, 1024] {
        let (h, _) = scene::box_on_plane(n).unwrap();
        let g = gradient(&h);
        group.bench_with_input(BenchmarkId::new("par", n), &g, |b, g| {
            b.iter(|| phi1(g, 8.0, PhiMode::Normalized).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &g, |b, g| {
            b.iter(|| phi1_seq(g, 8.0, PhiMode::Normalized).unwrap())
        });
    }
    group.finish();
}

fn bench_divergence(c: &mut Criterion) {
    let mut group = c.benchmark_group("divergence");
    for n in [256usize, 1024] {
        let (h, _) = scene::box_on_plane(n).unwrap();
        let g = gradient(&h);
        group.bench_with_input(BenchmarkId::new("par", n), &g, |b, g| {
            b.iter(|| divergence(g))
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &g, |b, g| {
            b.iter(|| divergence_seq(g))
        });
    }
    group.finish();
}

fn bench_spectral_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct_from_gradients");
    group.sample_size(10);
    for n in [256usize, 1024] {
        let (h, _) = scene::box_on_plane(n).unwrap();
        let g = phi1(&gradient(&h), 8.0, PhiMode::Normalized).unwrap();
        group.bench_with_input(BenchmarkId::new("par", n), &g, |b, g| {
            b.iter(|| reconstruct_from_gradients(g).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &g, |b, g| {
            b.iter(|| reconstruct_from_gradients_seq(g).unwrap())
        });
    }
    group.finish();
}

fn bench_loss_l2s(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_l2s");
    for n in [256usize, 1024] {
        let (h, _) = scene::box_on_plane(n).unwrap();
        let g = phi1(&gradient(&h), 8.0, PhiMode::Normalized).unwrap();
        let omega = MaskField::all_true(n, n).unwrap();
        group.bench_with_input(BenchmarkId::new("eval", n), &n, |b, _| {
            b.iter(|| relief_core::loss_l2s(&h, &g, &omega).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_gradient,
    bench_phi1,
    bench_divergence,
    bench_spectral_solve,
    bench_loss_l2s
);
criterion_main!(benches);
