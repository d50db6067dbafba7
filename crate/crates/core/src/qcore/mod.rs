// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Exact finite-dimensional quantum mechanics for up to four qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so the two-qubit
//! amplitude vector is ordered `|00>, |01>, |10>, |11>`.

mod entanglement;
pub mod linalg;
mod measure;
mod state;

pub use entanglement::concurrence;
pub use linalg::{Op2, C64};
pub use measure::{
    ancilla_coupling_unitary, apply_readout_noise, nonselective_weak, projective_measure, rescale,
    weak_kraus, weak_measure, KrausPair,
};
pub use state::{partial_trace, QuantumState, Representation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for algebraic identities (norms, traces, completeness).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Slack allowed below zero for density-operator eigenvalues.
pub const POSITIVITY_SLACK: f64 = 1e-10;
/// Branches less likely than this cannot be sampled.
pub const MIN_OUTCOME_PROB: f64 = 1e-15;
pub const MAX_QUBITS: usize = 4;

/// Measurement direction in the x-z plane of the Bloch sphere, as an angle
/// from +z towards +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MeasurementAxis {
    theta: f64,
}

impl MeasurementAxis {
    pub const Z: MeasurementAxis = MeasurementAxis { theta: 0.0 };
    pub const X: MeasurementAxis = MeasurementAxis {
        theta: std::f64::consts::FRAC_PI_2,
    };

    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidAxis(theta));
        }
        Ok(Self { theta })
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::InvalidAxis(degrees));
        }
        Self::new(degrees.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn degrees(&self) -> f64 {
        self.theta.to_degrees()
    }

    /// Unit Bloch vector `(x, z)`.
    pub fn direction(&self) -> (f64, f64) {
        (self.theta.sin(), self.theta.cos())
    }
}

impl TryFrom<f64> for MeasurementAxis {
    type Error = Error;
    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<MeasurementAxis> for f64 {
    fn from(axis: MeasurementAxis) -> f64 {
        axis.theta
    }
}

/// Ancilla coupling strength `V` in `(0, 1]`; `V = 1` is a projective
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CouplingStrength(f64);

impl CouplingStrength {
    pub const STRONG: CouplingStrength = CouplingStrength(1.0);

    pub fn new(v: f64) -> Result<Self> {
        if v.is_finite() && v > 0.0 && v <= 1.0 {
            Ok(Self(v))
        } else {
            Err(Error::InvalidStrength(v))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Off-diagonal damping factor `sqrt(1 - V^2)` of the non-selective channel.
    pub fn damping(&self) -> f64 {
        (1.0 - self.0 * self.0).max(0.0).sqrt()
    }
}

impl TryFrom<f64> for CouplingStrength {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CouplingStrength> for f64 {
    fn from(v: CouplingStrength) -> f64 {
        v.0
    }
}

/// Detector noise added to the raw ancilla signal before rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub bias: f64,
    pub sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        bias: 0.0,
        sigma: 0.0,
    };

    pub fn new(bias: f64, sigma: f64) -> Result<Self> {
        if !bias.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise bias {bias} is not finite"
            )));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidNoise(sigma));
        }
        Ok(Self { bias, sigma })
    }

    pub fn unbiased(sigma: f64) -> Result<Self> {
        Self::new(0.0, sigma)
    }

    pub fn is_noiseless(&self) -> bool {
        self.bias == 0.0 && self.sigma == 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::NONE
    }
}

/// A two-valued measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_i8(value: i8) -> Result<Self> {
        match value {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::NonBinary(other as f64)),
        }
    }
}

/// `cos(theta) sigma_z + sin(theta) sigma_x`.
pub fn bloch_observable(axis: MeasurementAxis) -> Op2 {
    let (s, c) = axis.theta.sin_cos();
    linalg::pauli_z() * linalg::re(c) + linalg::pauli_x() * linalg::re(s)
}

/// Spectral projector of `bloch_observable(axis)` for eigenvalue `outcome`.
pub fn eigenprojector(axis: MeasurementAxis, outcome: Outcome) -> Op2 {
    (linalg::identity2() + bloch_observable(axis) * linalg::re(outcome.sign())) * linalg::re(0.5)
}

#[cfg(test)]
mod tests {
    use super::linalg::*;
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn close(a: &Op2, b: &Op2, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    #[test]
    fn observable_axes() {
        assert!(close(
            &bloch_observable(MeasurementAxis::Z),
            &pauli_z(),
            1e-15
        ));
        assert!(close(
            &bloch_observable(MeasurementAxis::new(FRAC_PI_2).unwrap()),
            &pauli_x(),
            1e-15
        ));
        let diag = bloch_observable(MeasurementAxis::new(FRAC_PI_4).unwrap());
        let expected = (pauli_z() + pauli_x()) * re(FRAC_1_SQRT_2);
        assert!(close(&diag, &expected, 1e-15));
        let ev = hermitian_eigenvalues(&to_dynamic(&diag));
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn observable_is_traceless_involution() {
        for k in 0..50 {
            let axis = MeasurementAxis::new(k as f64 * 0.37 - 5.0).unwrap();
            let s = bloch_observable(axis);
            assert!(close(&s, &s.adjoint(), 1e-15));
            assert!(s.trace().norm() < 1e-15);
            assert!(close(&(s * s), &identity2(), 1e-15));
        }
    }

    #[test]
    fn strength_validation() {
        assert!(CouplingStrength::new(0.0).is_err());
        assert!(CouplingStrength::new(1.5).is_err());
        assert!(CouplingStrength::new(-0.2).is_err());
        assert!(CouplingStrength::new(f64::NAN).is_err());
        assert!(CouplingStrength::new(1.0).is_ok());
        assert!(serde_json::from_str::<CouplingStrength>("1.5").is_err());
        let v: CouplingStrength = serde_json::from_str("0.6").unwrap();
        assert!((v.damping() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn axis_and_noise_validation() {
        assert!(MeasurementAxis::new(f64::INFINITY).is_err());
        assert!(NoiseModel::new(0.0, -0.1).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.1).is_err());
        assert!(NoiseModel::unbiased(0.3).is_ok());
    }

    #[test]
    fn projectors_resolve_identity() {
        let axis = MeasurementAxis::from_degrees(30.0).unwrap();
        let sum = eigenprojector(axis, Outcome::Plus) + eigenprojector(axis, Outcome::Minus);
        assert!(close(&sum, &identity2(), 1e-15));
        let p = eigenprojector(axis, Outcome::Minus);
        assert!(close(&(p * p), &p, 1e-15));
    }
}
