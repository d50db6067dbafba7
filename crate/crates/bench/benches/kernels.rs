// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use weakbell_core::harness::{simulate, WorkerPool};
use weakbell_core::predictor::{run_prediction_experiment, SequentialReadoutParams};
use weakbell_core::protocol::{exact_chsh, post_weak_state, run_trial, BellKind, Settings};
use weakbell_core::qcore::concurrence;
use weakbell_core::{CouplingStrength, NoiseModel};

fn settings() -> Settings {
    Settings::chsh_default(CouplingStrength::new(0.2).unwrap())
        .with_noise(NoiseModel::unbiased(0.3).unwrap())
}

fn protocol(c: &mut Criterion) {
    let s = settings();
    c.bench_function("run_trial", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            run_trial(black_box(&s), i, 7).unwrap()
        })
    });
    c.bench_function("exact_chsh", |b| {
        b.iter(|| exact_chsh(black_box(&s)).unwrap())
    });
    let pool = WorkerPool::available();
    c.bench_function("simulate 10k trials", |b| {
        b.iter(|| simulate(black_box(&s), 10_000, 7, &pool).unwrap())
    });
}

fn entanglement(c: &mut Criterion) {
    let state = post_weak_state(&settings()).unwrap();
    c.bench_function("concurrence", |b| {
        b.iter(|| concurrence(black_box(&state)).unwrap())
    });
}

fn prediction(c: &mut Criterion) {
    let s = Settings::from_degrees(
        [45.0, -45.0, 45.0, -45.0],
        CouplingStrength::new(0.3).unwrap(),
        NoiseModel::NONE,
        BellKind::PhiPlus,
    )
    .unwrap();
    let readout =
        SequentialReadoutParams::new(CouplingStrength::new(0.05).unwrap(), 10_000).unwrap();
    c.bench_function("prediction trial (10^4 readout steps)", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            run_prediction_experiment(black_box(&s), &readout, i, 7).unwrap()
        })
    });
}

criterion_group!(benches, protocol, entanglement, prediction);
criterion_main!(benches);
