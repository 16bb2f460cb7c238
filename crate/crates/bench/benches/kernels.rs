use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use trimer_core::continuation::{regular_study, StudyOptions};
use trimer_core::dynamics::{integrate, perturb, uniform_grid, IntegrationOptions};
use trimer_core::spectra::stationary_spectrum;
use trimer_core::stationary::{quintic_coefficients, real_nonneg_roots, solve_all_stationary};
use trimer_core::waveguide::{propagate_expm, CouplerConfig, GainConvention, CENTRAL_INPUT};
use trimer_core::TrimerParams;

fn stationary(c: &mut Criterion) {
    let p = TrimerParams::new(1.0, 1.0, 0.9).unwrap();
    c.bench_function("quintic_roots", |b| {
        b.iter(|| real_nonneg_roots(&quintic_coefficients(black_box(&p))))
    });
    c.bench_function("solve_all_stationary", |b| {
        b.iter(|| solve_all_stationary(black_box(&p)))
    });
    let point = solve_all_stationary(&p).remove(0);
    c.bench_function("spectrum", |b| {
        b.iter(|| stationary_spectrum(black_box(&point)).unwrap())
    });
}

fn continuation(c: &mut Criterion) {
    let mut g = c.benchmark_group("continuation");
    g.sample_size(10);
    g.bench_function("regular_study_E1_k1", |b| {
        b.iter(|| regular_study(1.0, 1.0, black_box(2.0), &StudyOptions::default()).unwrap())
    });
    g.finish();
}

fn dynamics(c: &mut Criterion) {
    let p = TrimerParams::new(1.0, 1.0, 0.5).unwrap();
    let point = solve_all_stationary(&p).remove(0);
    let u0 = perturb(&point.polar.to_state(), 1e-6);
    let grid = uniform_grid(20.0, 200);
    let opts = IntegrationOptions::default();
    let mut g = c.benchmark_group("dynamics");
    g.sample_size(20);
    g.bench_function("integrate_t20", |b| {
        b.iter(|| integrate(black_box(&u0), &p, 20.0, &grid, &opts).unwrap())
    });
    g.finish();
}

fn waveguide(c: &mut Criterion) {
    let gains = GainConvention::Half.gains(0.6, 0.0);
    let cfg = CouplerConfig::new(0.2, 20.0, gains, CENTRAL_INPUT).unwrap();
    c.bench_function("propagate_expm", |b| {
        b.iter(|| propagate_expm(black_box(&cfg), 20.0))
    });
    let skew = cfg.with_gains([0.3, -0.3, 0.25]);
    c.bench_function("propagate_expm_asymmetric", |b| {
        b.iter(|| propagate_expm(black_box(&skew), 20.0))
    });
}

criterion_group!(benches, stationary, continuation, dynamics, waveguide);
criterion_main!(benches);
