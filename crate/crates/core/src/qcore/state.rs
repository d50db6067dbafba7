// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::linalg::{self, hermitian_eigenvalues, hermiticity_defect, Op2, C64};
use super::{ALGEBRA_TOL, MAX_QUBITS, MIN_OUTCOME_PROB, POSITIVITY_SLACK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

/// A normalized state of 1 to 4 qubits, either as amplitudes or as a density
/// operator. Constructors enforce the state invariants; every operation that
/// returns a state renormalizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    repr: Representation,
}

fn check_qubit_count(num_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&num_qubits) {
        Ok(())
    } else {
        Err(Error::UnsupportedQubitCount(num_qubits))
    }
}

impl QuantumState {
    pub fn from_amplitudes(num_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        if amplitudes.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {num_qubits} qubits",
                amplitudes.len()
            )));
        }
        let state = Self {
            num_qubits,
            repr: Representation::Pure(DVector::from_vec(amplitudes)),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn from_density(num_qubits: usize, rho: DMatrix<C64>) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if rho.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!(
                "{:?} density operator for {num_qubits} qubits",
                rho.shape()
            )));
        }
        let state = Self {
            num_qubits,
            repr: Representation::Mixed(rho),
        };
        state.validate()?;
        Ok(state)
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch(format!(
                "basis index {index} >= {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::from_amplitudes(num_qubits, amps)
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1 << num_qubits;
        let rho = DMatrix::identity(dim, dim) * linalg::re(1.0 / dim as f64);
        Self::from_density(num_qubits, rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_pure_representation(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C64>> {
        match &self.repr {
            Representation::Pure(psi) => Some(psi),
            Representation::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.repr {
            Representation::Pure(psi) => psi * psi.adjoint(),
            Representation::Mixed(rho) => rho.clone(),
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self {
            num_qubits: self.num_qubits,
            repr: Representation::Mixed(self.density_matrix()),
        }
    }

    /// Tensor product `self ⊗ other`; qubits of `other` follow those of `self`.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        check_qubit_count(n)?;
        let repr = match (&self.repr, &other.repr) {
            (Representation::Pure(a), Representation::Pure(b)) => {
                Representation::Pure(DVector::from_fn(a.len() * b.len(), |i, _| {
                    a[i / b.len()] * b[i % b.len()]
                }))
            }
            _ => Representation::Mixed(linalg::kron(
                &self.density_matrix(),
                &other.density_matrix(),
            )),
        };
        Ok(Self {
            num_qubits: n,
            repr,
        })
    }

    /// Check norm, trace, Hermiticity and positivity.
    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            Representation::Pure(psi) => {
                let norm = psi.norm();
                if !norm.is_finite() || (norm - 1.0).abs() > ALGEBRA_TOL {
                    return Err(Error::InvalidState(format!("amplitude norm {norm}")));
                }
            }
            Representation::Mixed(rho) => {
                let herm = hermiticity_defect(rho);
                if !herm.is_finite() || herm > ALGEBRA_TOL {
                    return Err(Error::InvalidState(format!("hermiticity defect {herm:e}")));
                }
                let trace = rho.trace();
                if (trace.re - 1.0).abs() > ALGEBRA_TOL || trace.im.abs() > ALGEBRA_TOL {
                    return Err(Error::InvalidState(format!("trace {trace}")));
                }
                let min_eig = hermitian_eigenvalues(rho).last().copied().unwrap_or(0.0);
                if min_eig < -POSITIVITY_SLACK {
                    return Err(Error::InvalidState(format!("eigenvalue {min_eig:e}")));
                }
            }
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for (k, &q) in qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
            if qubits[..k].contains(&q) {
                return Err(Error::InvalidParameter(format!("qubit {q} listed twice")));
            }
        }
        Ok(())
    }

    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies `op` (acting on `qubits`, first listed qubit most significant)
    /// without renormalizing: `K psi` or `K rho K^dagger`.
    fn transform(&self, qubits: &[usize], op: &DMatrix<C64>) -> Representation {
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        match &self.repr {
            Representation::Pure(psi) => {
                let mut out = psi.clone();
                apply_to_vector(out.as_mut_slice(), &masks, op);
                Representation::Pure(out)
            }
            Representation::Mixed(rho) => {
                let dim = rho.nrows();
                let mut m = rho.clone();
                for c in 0..dim {
                    apply_to_vector(m.column_mut(c).as_mut_slice(), &masks, op);
                }
                // K M^dagger, whose adjoint is M K^dagger.
                let mut m = m.adjoint();
                for c in 0..dim {
                    apply_to_vector(m.column_mut(c).as_mut_slice(), &masks, op);
                }
                Representation::Mixed(m.adjoint())
            }
        }
    }

    fn weight(repr: &Representation) -> f64 {
        match repr {
            Representation::Pure(psi) => psi.norm_squared(),
            Representation::Mixed(rho) => rho.trace().re,
        }
    }

    fn normalized(&self, repr: Representation, weight: f64) -> Self {
        let repr = match repr {
            Representation::Pure(psi) => Representation::Pure(psi / linalg::re(weight.sqrt())),
            Representation::Mixed(rho) => {
                let rho = rho / linalg::re(weight);
                // Symmetrize away roundoff so Hermiticity holds to machine precision.
                Representation::Mixed((&rho + rho.adjoint()) * linalg::re(0.5))
            }
        };
        Self {
            num_qubits: self.num_qubits,
            repr,
        }
    }

    /// Probability of the branch selected by `kraus` on `qubits`, and the
    /// normalized post-branch state.
    pub fn branch(&self, qubits: &[usize], kraus: &DMatrix<C64>) -> Result<(f64, QuantumState)> {
        self.check_op(qubits, kraus)?;
        let repr = self.transform(qubits, kraus);
        let p = Self::weight(&repr);
        if p.is_nan() || p < MIN_OUTCOME_PROB {
            return Err(Error::DegenerateOutcome(p));
        }
        Ok((p, self.normalized(repr, p)))
    }

    /// Branch probability `||K psi||^2` (or `tr K rho K^dagger`) only.
    pub fn branch_probability(&self, qubits: &[usize], kraus: &DMatrix<C64>) -> Result<f64> {
        self.check_op(qubits, kraus)?;
        Ok(Self::weight(&self.transform(qubits, kraus)))
    }

    /// Applies a norm-preserving operator (a unitary) on `qubits`.
    pub fn evolve(&self, qubits: &[usize], unitary: &DMatrix<C64>) -> Result<QuantumState> {
        let (p, state) = self.branch(qubits, unitary)?;
        if (p - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "operator is not norm preserving on this state (weight {p})"
            )));
        }
        Ok(state)
    }

    pub fn branch_local(&self, qubit: usize, kraus: &Op2) -> Result<(f64, QuantumState)> {
        self.branch(&[qubit], &linalg::to_dynamic(kraus))
    }

    pub fn branch_probability_local(&self, qubit: usize, kraus: &Op2) -> Result<f64> {
        self.branch_probability(&[qubit], &linalg::to_dynamic(kraus))
    }

    /// Expectation of a Hermitian single-qubit observable on `qubit`.
    pub fn expectation(&self, qubit: usize, observable: &Op2) -> Result<f64> {
        self.expectation_multi(&[qubit], &linalg::to_dynamic(observable))
    }

    /// `tr(rho O)` for a Hermitian observable `O` acting on `qubits`.
    pub fn expectation_multi(&self, qubits: &[usize], observable: &DMatrix<C64>) -> Result<f64> {
        self.check_op(qubits, observable)?;
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let value = match &self.repr {
            Representation::Pure(psi) => {
                let mut phi = psi.clone();
                apply_to_vector(phi.as_mut_slice(), &masks, observable);
                psi.dotc(&phi)
            }
            Representation::Mixed(rho) => {
                let mut m = rho.clone();
                for c in 0..m.ncols() {
                    apply_to_vector(m.column_mut(c).as_mut_slice(), &masks, observable);
                }
                m.trace()
            }
        };
        Ok(value.re)
    }

    /// `sum_k K_k rho K_k^dagger` over a complete set of Kraus operators on
    /// `qubits`. The result is a density operator.
    pub fn apply_channel(&self, qubits: &[usize], kraus: &[DMatrix<C64>]) -> Result<QuantumState> {
        let dim = self.dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for k in kraus {
            self.check_op(qubits, k)?;
            let mixed = self.to_mixed();
            if let Representation::Mixed(m) = mixed.transform(qubits, k) {
                acc += m;
            }
        }
        let w = acc.trace().re;
        Ok(self.normalized(Representation::Mixed(acc), w))
    }

    fn check_op(&self, qubits: &[usize], op: &DMatrix<C64>) -> Result<()> {
        self.check_qubits(qubits)?;
        let d = 1 << qubits.len();
        if op.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "{:?} operator on {} qubits",
                op.shape(),
                qubits.len()
            )));
        }
        Ok(())
    }
}

/// In-place `v <- (op on the masked qubits) v`.
fn apply_to_vector(v: &mut [C64], masks: &[usize], op: &DMatrix<C64>) {
    let k = masks.len();
    let sub = 1usize << k;
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            masks
                .iter()
                .enumerate()
                .filter(|(j, _)| s >> (k - 1 - j) & 1 == 1)
                .map(|(_, m)| m)
                .sum()
        })
        .collect();
    let mut gathered = [C64::new(0.0, 0.0); 1 << MAX_QUBITS];
    for base in (0..v.len()).filter(|b| b & all == 0) {
        for (s, off) in offsets.iter().enumerate() {
            gathered[s] = v[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, g) in gathered[..sub].iter().enumerate() {
                acc += op[(r, c)] * g;
            }
            v[base | off] = acc;
        }
    }
}

/// Reduced density operator on `keep` (qubits in ascending order).
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<QuantumState> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    state.check_qubits(keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let n = state.num_qubits();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let place = |bits: usize, qubits: &[usize]| -> usize {
        qubits
            .iter()
            .enumerate()
            .filter(|(j, _)| bits >> (qubits.len() - 1 - j) & 1 == 1)
            .map(|(_, &q)| state.mask(q))
            .sum()
    };
    let kd = 1 << keep.len();
    let td = 1 << traced.len();
    let keep_idx: Vec<usize> = (0..kd).map(|b| place(b, &keep)).collect();
    let trace_idx: Vec<usize> = (0..td).map(|b| place(b, &traced)).collect();
    let rho = DMatrix::from_fn(kd, kd, |i, j| {
        trace_idx
            .iter()
            .map(|&t| {
                let (a, b) = (keep_idx[i] | t, keep_idx[j] | t);
                match state.representation() {
                    Representation::Pure(psi) => psi[a] * psi[b].conj(),
                    Representation::Mixed(rho) => rho[(a, b)],
                }
            })
            .sum()
    });
    let rho = (&rho + rho.adjoint()) * linalg::re(0.5);
    QuantumState::from_density(keep.len(), rho)
}
