// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and statistical auditing of weak-measurement Bell experiments.
//!
//! Each trial weakly couples both qubits of a Bell pair to ancillas (raw
//! `±1` signals rescaled to `±1/V`) and then measures the pair projectively.
//! The crate provides
//!
//! * [`qcore`]: exact few-qubit states, weak and projective measurement
//!   channels, partial trace and concurrence;
//! * [`protocol`]: trial orchestration, correlator estimation and an exact
//!   16-branch oracle;
//! * [`auditor`]: the binary CHSH bound and a test that rejects
//!   "binary signal plus unbiased noise" explanations of violating data;
//! * [`predictor`]: sequential weak readout of the ancillas to predict the
//!   projective outcomes of the Bell pair;
//! * [`harness`]: seeding, parallel execution, sweeps and CSV/JSON output.

pub mod auditor;
pub mod error;
pub mod harness;
pub mod predictor;
pub mod protocol;
pub mod qcore;
pub mod seed;

pub use error::{Error, Result};
pub use qcore::{CouplingStrength, MeasurementAxis, NoiseModel, Outcome, QuantumState};
