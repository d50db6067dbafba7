// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{format_real, simulate, WorkerPool};
use crate::auditor::{decomposition_test_with, AuditConfig, Verdict};
use crate::error::{Error, Result};
use crate::protocol::{estimate_chsh, exact_chsh, Settings};
use crate::qcore::CouplingStrength;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub v_values: Vec<CouplingStrength>,
    pub trials_per_point: u64,
}

impl SweepSpec {
    pub fn new(v_values: &[f64], trials_per_point: u64) -> Result<Self> {
        if v_values.is_empty() {
            return Err(Error::InvalidParameter("empty V grid".into()));
        }
        if trials_per_point == 0 {
            return Err(Error::InvalidParameter(
                "trials per point must be at least 1".into(),
            ));
        }
        Ok(Self {
            v_values: v_values
                .iter()
                .map(|&v| CouplingStrength::new(v))
                .collect::<Result<_>>()?,
            trials_per_point,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub v: f64,
    pub exact_chsh: f64,
    pub empirical_chsh: f64,
    pub stderr: f64,
    pub audit_chsh: f64,
    pub audit_stderr: f64,
    pub verdict: Verdict,
    pub trials: u64,
}

pub const SWEEP_HEADER: [&str; 8] = [
    "v",
    "exact_chsh",
    "empirical_chsh",
    "stderr",
    "audit_chsh",
    "audit_stderr",
    "verdict",
    "trials",
];

/// One row per coupling strength. Each point draws from its own seed,
/// derived from `master_seed` and the bits of `V`, so rows do not depend on
/// grid order.
pub fn run_sweep(
    spec: &SweepSpec,
    settings: &Settings,
    master_seed: u64,
    pool: &WorkerPool,
    audit: &AuditConfig,
) -> Result<Vec<SweepRow>> {
    spec.v_values
        .iter()
        .map(|&v| {
            let point = settings.with_v(v);
            let seed = derive_seed(master_seed, v.value().to_bits());
            let records = simulate(&point, spec.trials_per_point, seed, pool)?;
            let (empirical_chsh, stderr) = if records.len() >= 2 {
                let report = estimate_chsh(&records)?;
                (report.chsh, report.chsh_stderr)
            } else {
                (f64::NAN, f64::NAN)
            };
            let verdict = decomposition_test_with(&records, v.value(), audit)?;
            Ok(SweepRow {
                v: v.value(),
                exact_chsh: exact_chsh(&point)?,
                empirical_chsh,
                stderr,
                audit_chsh: verdict.chsh_value,
                audit_stderr: verdict.chsh_stderr,
                verdict: verdict.verdict,
                trials: spec.trials_per_point,
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(rows: &[SweepRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let verdict = serde_json::to_value(r.verdict)?;
        w.write_record([
            format_real(r.v),
            format_real(r.exact_chsh),
            format_real(r.empirical_chsh),
            format_real(r.stderr),
            format_real(r.audit_chsh),
            format_real(r.audit_stderr),
            verdict.as_str().unwrap_or_default().to_string(),
            r.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
