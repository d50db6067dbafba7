// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coupling strength {0} is outside (0, 1]")]
    InvalidStrength(f64),

    #[error("measurement angle {0} is not finite")]
    InvalidAxis(f64),

    #[error("noise sigma {0} must be finite and non-negative")]
    InvalidNoise(f64),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("unsupported qubit count {0} (expected 1..=4)")]
    UnsupportedQubitCount(usize),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("outcome probability {0:e} is below the sampling floor")]
    DegenerateOutcome(f64),

    #[error("partial trace needs a nonempty set of kept qubits")]
    EmptyKeepSet,

    #[error("unknown Bell state kind `{0}`")]
    UnknownBellKind(String),

    #[error("value {0} is not a binary outcome (expected -1 or +1)")]
    NonBinary(f64),

    #[error("need at least {required} records, got {actual}")]
    TooFewRecords { required: usize, actual: usize },

    #[error("malformed record {index}: {reason}")]
    MalformedRecord { index: u64, reason: String },

    #[error("coupling axis and projection axis differ for Bell qubit {qubit}")]
    AxisMismatch { qubit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
