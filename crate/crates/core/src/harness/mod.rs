// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Run orchestration: parallel trial execution, sweeps, and persistence.
//!
//! Trials are independent tasks keyed by `(master_seed, trial_index)`.
//! Results are gathered in index order and reduced sequentially, so every
//! output is identical for any worker count.

mod manifest;
mod records;
mod sweep;

pub use manifest::{emit_manifest, load_manifest, RunManifest};
pub use records::{
    emit_predictions, emit_records, format_real, read_predictions, read_records, write_predictions,
    write_records, PREDICTION_HEADER, RECORD_HEADER,
};
pub use sweep::{run_sweep, write_sweep, SweepRow, SweepSpec, SWEEP_HEADER};

use rayon::prelude::*;

use crate::auditor::HiddenVariableSource;
use crate::error::{Error, Result};
use crate::predictor::{
    post_protocol_bell_trial, run_prediction_experiment, BellTestSample, PredictionRecord,
    SequentialReadoutParams,
};
use crate::protocol::{run_trial, Settings, TrialRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkerPool {
    workers: usize,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidParameter(
                "worker count must be at least 1".into(),
            ));
        }
        Ok(Self { workers })
    }

    /// One worker per available CPU.
    pub fn available() -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0), f(1), ..., f(count - 1)` evaluated on the pool, in index order.
    pub fn map_indexed<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        if self.workers == 1 {
            return (0..count).map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
        {
            Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
            Err(_) => (0..count).map(f).collect(),
        }
    }

    pub fn try_map_indexed<T, F>(&self, count: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync + Send,
    {
        self.map_indexed(count, f).into_iter().collect()
    }
}

pub fn simulate(
    settings: &Settings,
    trials: u64,
    master_seed: u64,
    pool: &WorkerPool,
) -> Result<Vec<TrialRecord>> {
    pool.try_map_indexed(trials, |i| run_trial(settings, i, master_seed))
}

pub fn simulate_hidden_variables(
    source: &HiddenVariableSource,
    trials: u64,
    master_seed: u64,
    pool: &WorkerPool,
) -> Vec<TrialRecord> {
    pool.map_indexed(trials, |i| source.sample(i, master_seed))
}

pub fn simulate_predictions(
    settings: &Settings,
    readout: &SequentialReadoutParams,
    trials: u64,
    master_seed: u64,
    pool: &WorkerPool,
) -> Result<Vec<PredictionRecord>> {
    pool.try_map_indexed(trials, |i| {
        run_prediction_experiment(settings, readout, i, master_seed)
    })
}

pub fn simulate_post_protocol(
    settings: &Settings,
    readout: &SequentialReadoutParams,
    trials: u64,
    master_seed: u64,
    pool: &WorkerPool,
) -> Result<Vec<BellTestSample>> {
    pool.try_map_indexed(trials, |i| {
        post_protocol_bell_trial(settings, readout, i, master_seed)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{CouplingStrength, NoiseModel};

    #[test]
    fn pool_preserves_order() {
        let pool = WorkerPool::new(4).unwrap();
        let out = pool.map_indexed(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &x)| x == (i * i) as u64));
        assert!(WorkerPool::new(0).is_err());
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let s = Settings::chsh_default(CouplingStrength::new(0.3).unwrap())
            .with_noise(NoiseModel::unbiased(0.2).unwrap());
        let a = simulate(&s, 5_000, 9, &WorkerPool::new(1).unwrap()).unwrap();
        let b = simulate(&s, 5_000, 9, &WorkerPool::new(7).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
