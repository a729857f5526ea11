use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hitchsim_core::fit::{b_from_gain_prepared, ExitModel, B_TOLERANCE};
use hitchsim_core::presets::experiment_geometry;
use hitchsim_core::transfer_matrix;

fn transfer(c: &mut Criterion) {
    let (s, _) = hitchsim_bench::fig1();
    let kx = s.seed.tilt * s.medium.k();
    c.bench_function("transfer_matrix", |b| {
        b.iter(|| transfer_matrix(black_box(kx), black_box(s.medium.length()), &s.medium))
    });
}

fn propagate(c: &mut Criterion) {
    let (s, prepared) = hitchsim_bench::fig1();
    let z = s.medium.length();
    c.bench_function("propagate_full_grid", |b| {
        b.iter(|| prepared.propagate(black_box(z), &s.medium).unwrap())
    });
    c.bench_function("propagate_support", |b| {
        b.iter(|| prepared.propagate_support(black_box(z), &s.medium).unwrap())
    });
    c.bench_function("net_gain", |b| b.iter(|| prepared.net_gain(black_box(&s.medium))));
}

fn inverse(c: &mut Criterion) {
    let (s, prepared) = hitchsim_bench::fig1();
    let template = s.medium.with_b(0.0).unwrap();
    c.bench_function("b_from_gain", |b| {
        b.iter(|| b_from_gain_prepared(black_box(30.0), &template, &prepared, B_TOLERANCE).unwrap())
    });
    let model = ExitModel::new(experiment_geometry(), &s.grid, 1e-11).unwrap();
    c.bench_function("model_exit_positions", |b| {
        b.iter(|| model.positions(black_box(10.0), black_box(1.7e-5)).unwrap())
    });
}

criterion_group!(benches, transfer, propagate, inverse);
criterion_main!(benches);
