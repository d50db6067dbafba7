// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-outcome weak measurement channels.
//!
//! A coupling of strength `V` along axis `theta` acts on the measured qubit
//! through `k± = sqrt((I ± V sigma(theta)) / 2)`. The raw outcome then has
//! mean `V <sigma(theta)>` and the non-selective channel damps coherences in
//! the `sigma(theta)` eigenbasis by `sqrt(1 - V^2)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::linalg::{self, identity2, re, Op2, C64};
use super::{eigenprojector, CouplingStrength, MeasurementAxis, NoiseModel, Outcome, QuantumState};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    pub plus: Op2,
    pub minus: Op2,
}

impl KrausPair {
    pub fn operator(&self, outcome: Outcome) -> &Op2 {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
        }
    }

    /// Largest entry of `|k+^† k+ + k-^† k- - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.plus.adjoint() * self.plus + self.minus.adjoint() * self.minus;
        (sum - identity2())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Built from the exact spectral decomposition
/// `(I ± V sigma) / 2 = (1 ± V)/2 P+ + (1 ∓ V)/2 P-`, so the `V = 1` pair is
/// exactly the projector pair.
pub fn weak_kraus(v: CouplingStrength, axis: MeasurementAxis) -> KrausPair {
    let p_plus = eigenprojector(axis, Outcome::Plus);
    let p_minus = eigenprojector(axis, Outcome::Minus);
    let hi = re(((1.0 + v.value()) / 2.0).sqrt());
    let lo = re(((1.0 - v.value()) / 2.0).sqrt());
    KrausPair {
        plus: p_plus * hi + p_minus * lo,
        minus: p_plus * lo + p_minus * hi,
    }
}

fn sample_branch<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    pair: &KrausPair,
    rng: &mut R,
) -> Result<(Outcome, QuantumState)> {
    let p_plus = state.branch_probability_local(qubit, &pair.plus)?;
    let outcome = if rng.random::<f64>() < p_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let (_, post) = state.branch_local(qubit, pair.operator(outcome))?;
    Ok((outcome, post))
}

/// Weakly measures `qubit` and returns the raw `±1` outcome with the
/// conditioned post-measurement state.
pub fn weak_measure<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    v: CouplingStrength,
    rng: &mut R,
) -> Result<(Outcome, QuantumState)> {
    sample_branch(state, qubit, &weak_kraus(v, axis), rng)
}

/// Projective measurement along `axis`; the post state is the eigenprojection.
pub fn projective_measure<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    rng: &mut R,
) -> Result<(Outcome, QuantumState)> {
    let pair = KrausPair {
        plus: eigenprojector(axis, Outcome::Plus),
        minus: eigenprojector(axis, Outcome::Minus),
    };
    sample_branch(state, qubit, &pair, rng)
}

/// Outcome-averaged weak measurement `sum_± k± rho k±^†`.
pub fn nonselective_weak(
    state: &QuantumState,
    qubit: usize,
    axis: MeasurementAxis,
    v: CouplingStrength,
) -> Result<QuantumState> {
    let pair = weak_kraus(v, axis);
    state.apply_channel(
        &[qubit],
        &[
            linalg::to_dynamic(&pair.plus),
            linalg::to_dynamic(&pair.minus),
        ],
    )
}

/// Normalizes a raw ancilla signal by the coupling strength.
pub fn rescale(raw: f64, v: CouplingStrength) -> f64 {
    raw / v.value()
}

pub fn apply_readout_noise<R: Rng + ?Sized>(raw: f64, model: &NoiseModel, rng: &mut R) -> f64 {
    let jitter = if model.sigma > 0.0 {
        // sigma is validated finite and non-negative
        Normal::new(0.0, model.sigma)
            .expect("valid sigma")
            .sample(rng)
    } else {
        0.0
    };
    raw + model.bias + jitter
}

/// Coupling of a system qubit (first factor) to an ancilla starting in `|0>`
/// (second factor): `sum_s P_s(theta) ⊗ R_y(acos(s V))`.
///
/// A subsequent projective z readout of the ancilla realizes exactly the
/// Kraus pair of [`weak_kraus`] on the system, with ancilla `|0>` as `+1`.
pub fn ancilla_coupling_unitary(v: CouplingStrength, axis: MeasurementAxis) -> DMatrix<C64> {
    let mut u = DMatrix::zeros(4, 4);
    for s in Outcome::BOTH {
        let angle = (s.sign() * v.value()).clamp(-1.0, 1.0).acos();
        let (sin, cos) = (angle / 2.0).sin_cos();
        let rotation = DMatrix::from_row_slice(2, 2, &[re(cos), re(-sin), re(sin), re(cos)]);
        u += linalg::kron(&linalg::to_dynamic(&eigenprojector(axis, s)), &rotation);
    }
    u
}
