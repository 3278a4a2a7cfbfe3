use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qbat::{
    build_h_undriven, ground_state, initial_state, propagate, step_magnus4, ModelHamiltonian,
    ModelParams, PropagationConfig, C64,
};
use std::hint::black_box;

fn charging_point(n: usize) -> ModelParams {
    ModelParams::new(n)
        .with_g(0.5)
        .with_drive(1.0)
        .with_eta(0.8)
}

fn matvec(c: &mut Criterion) {
    let mut group = c.benchmark_group("matvec");
    for n in [2, 4, 6] {
        let h = ModelHamiltonian::new(&charging_point(n)).unwrap();
        let op = h.at(0.3);
        let x = vec![C64::new(1.0, 0.0); op.dim()];
        let mut y = vec![C64::default(); op.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| op.matvec(black_box(&x), &mut y))
        });
    }
    group.finish();
}

fn magnus_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("magnus4_step");
    for n in [2, 4, 6] {
        let params = charging_point(n);
        let h = ModelHamiltonian::new(&params).unwrap();
        let psi = initial_state(&params).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| step_magnus4(&h, black_box(&psi), 1.0, 1e-3).unwrap())
        });
    }
    group.finish();
}

fn trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate_t1");
    group.sample_size(10);
    let cfg = PropagationConfig {
        t_max: 1.0,
        ..Default::default()
    };
    for n in [2, 4] {
        let params = charging_point(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| propagate(black_box(&params), &cfg).unwrap())
        });
    }
    group.finish();
}

fn ground(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_state");
    group.sample_size(10);
    for n in [3, 5] {
        let h = build_h_undriven(&charging_point(n)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| ground_state(black_box(&h)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, matvec, magnus_step, trajectory, ground);
criterion_main!(benches);
