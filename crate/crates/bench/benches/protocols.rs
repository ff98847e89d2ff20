use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wormhole::circuits::build_v;
use wormhole::noise::run_experiment;
use wormhole::protocols::{general_protocol, measurement_free_teleport};
use wormhole::qstate::{fidelity, to_density, LabeledState, StateVector};
use wormhole::variational::{cost, six_states};
use wormhole::{ExperimentConfig, NoiseConfig};

fn protocol(c: &mut Criterion) {
    let psi = StateVector::from_bloch(0.7, 1.9);
    c.bench_function("measurement_free_teleport", |b| {
        b.iter(|| measurement_free_teleport(black_box(&psi)).unwrap())
    });
    let v = build_v();
    c.bench_function("general_protocol_n2", |b| {
        b.iter(|| general_protocol(black_box(&psi), &v, 2).unwrap())
    });
}

fn linear_algebra(c: &mut Criterion) {
    let a = to_density(&LabeledState::from_label("plus").unwrap().state);
    let b = wormhole::DensityMatrix::maximally_mixed(1);
    c.bench_function("fidelity_1q", |bch| {
        bch.iter(|| fidelity(black_box(&a), &b).unwrap())
    });
}

fn variational(c: &mut Criterion) {
    let states = six_states();
    let thetas: Vec<f64> = (0..12).map(|i| 0.37 * i as f64).collect();
    c.bench_function("cost_n3_reps2", |b| {
        b.iter(|| cost(black_box(&thetas), 3, &states).unwrap())
    });
}

fn experiment(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        runs: 2,
        shots: 1024,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(20);
    group.bench_function("2x1024", |b| {
        b.iter(|| run_experiment(black_box(&cfg), &NoiseConfig::noiseless()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, protocol, linear_algebra, variational, experiment);
criterion_main!(benches);
