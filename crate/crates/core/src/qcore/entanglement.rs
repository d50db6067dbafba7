// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use super::linalg::{self, hermitian_eigenvalues, hermitian_sqrt};
use super::QuantumState;
use crate::error::{Error, Result};

/// Wootters concurrence of a two-qubit state.
///
/// Uses the Hermitian form `R = sqrt(sqrt(rho) rho~ sqrt(rho))`, whose
/// eigenvalues are the square roots of the spectrum of `rho rho~`.
pub fn concurrence(state: &QuantumState) -> Result<f64> {
    if state.num_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "concurrence needs 2 qubits, got {}",
            state.num_qubits()
        )));
    }
    let rho = state.density_matrix();
    let yy = {
        let y = linalg::to_dynamic(&linalg::pauli_y());
        linalg::kron(&y, &y)
    };
    let flipped = &yy * rho.conjugate() * &yy;
    let root = hermitian_sqrt(&rho);
    let inner = &root * flipped * &root;
    let inner = (&inner + inner.adjoint()) * linalg::re(0.5);
    let lambdas: Vec<f64> = hermitian_eigenvalues(&inner)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{re, C64};
    use crate::qcore::{nonselective_weak, CouplingStrength, MeasurementAxis};
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn phi_plus() -> QuantumState {
        QuantumState::from_amplitudes(
            2,
            vec![re(FRAC_1_SQRT_2), re(0.0), re(0.0), re(FRAC_1_SQRT_2)],
        )
        .unwrap()
    }

    /// X-state closed form: 2 max(0, |r03| - sqrt(r11 r22), |r12| - sqrt(r00 r33)).
    fn x_state_concurrence(rho: &DMatrix<C64>) -> f64 {
        let a = rho[(0, 3)].norm() - (rho[(1, 1)].re * rho[(2, 2)].re).sqrt();
        let b = rho[(1, 2)].norm() - (rho[(0, 0)].re * rho[(3, 3)].re).sqrt();
        2.0 * a.max(b).max(0.0)
    }

    #[test]
    fn bell_state_is_maximal() {
        assert!((concurrence(&phi_plus()).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn maximally_mixed_is_separable() {
        assert!(concurrence(&QuantumState::maximally_mixed(2).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn product_state_is_separable() {
        let s = QuantumState::basis(1, 0)
            .unwrap()
            .tensor(&QuantumState::basis(1, 1).unwrap())
            .unwrap();
        assert!(concurrence(&s).unwrap() < 1e-7);
    }

    #[test]
    fn weak_z_measurement_damps_to_point_eight() {
        let v = CouplingStrength::new(0.6).unwrap();
        let out = nonselective_weak(&phi_plus(), 0, MeasurementAxis::Z, v).unwrap();
        let oracle = x_state_concurrence(&out.density_matrix());
        assert!((oracle - 0.8).abs() < 1e-12);
        assert!((concurrence(&out).unwrap() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn agrees_with_x_state_formula_on_werner_family() {
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let rho =
                phi_plus().density_matrix() * re(p) + DMatrix::identity(4, 4) * re((1.0 - p) / 4.0);
            let s = QuantumState::from_density(2, rho.clone()).unwrap();
            let expected = x_state_concurrence(&rho);
            assert!(
                (concurrence(&s).unwrap() - expected).abs() < 1e-8,
                "p = {p}"
            );
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        assert!(concurrence(&QuantumState::basis(1, 0).unwrap()).is_err());
    }
}
