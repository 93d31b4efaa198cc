use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dicke_core::{
    build_system, covariance_integral, covariance_lyapunov, default_nu_grid, eigenvalue_sweep, fluorescence,
    homodyne, optimal_squeezing, DickeParams,
};

fn eigenvalues(c: &mut Criterion) {
    let p = DickeParams::canonical();
    let grid: Vec<f64> = (0..=140).map(|k| k as f64 * 0.01).collect();
    c.bench_function("eigenvalue_sweep_141", |b| b.iter(|| eigenvalue_sweep(black_box(&p), black_box(&grid))));
}

fn spectra(c: &mut Criterion) {
    let p = DickeParams::canonical();
    let lambda = 0.4;
    let grid = default_nu_grid(&p, lambda);
    c.bench_function("fluorescence_2001", |b| b.iter(|| fluorescence(&p, black_box(lambda), &grid)));
    c.bench_function("homodyne_2001", |b| b.iter(|| homodyne(&p, black_box(lambda), 0.3, &grid)));
    c.bench_function("optimal_squeezing", |b| b.iter(|| optimal_squeezing(&p, black_box(0.6))));
}

fn covariance(c: &mut Criterion) {
    let p = DickeParams::canonical();
    for lambda in [0.3, 0.8] {
        let sys = build_system(&p, lambda, p.phase_at(lambda)).unwrap();
        c.bench_function(&format!("covariance_lyapunov_{lambda}"), |b| {
            b.iter(|| covariance_lyapunov(black_box(&sys)))
        });
        c.bench_function(&format!("covariance_integral_{lambda}"), |b| {
            b.iter(|| covariance_integral(&p, black_box(lambda), p.phase_at(lambda)))
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = eigenvalues, spectra, covariance
}
criterion_main!(benches);
