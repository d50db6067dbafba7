// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex linear algebra helpers.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

pub type C64 = Complex64;

/// A single-qubit operator.
pub type Op2 = Matrix2<C64>;

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity2() -> Op2 {
    Op2::identity()
}

pub fn pauli_x() -> Op2 {
    Op2::new(re(0.0), re(1.0), re(1.0), re(0.0))
}

pub fn pauli_y() -> Op2 {
    Op2::new(re(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), re(0.0))
}

pub fn pauli_z() -> Op2 {
    Op2::new(re(1.0), re(0.0), re(0.0), re(-1.0))
}

pub fn to_dynamic(op: &Op2) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| op[(i, j)])
}

pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues of a Hermitian matrix, sorted in descending order.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut values: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Principal square root of a Hermitian positive semidefinite matrix via its
/// eigendecomposition. Eigenvalues within roundoff of zero are clamped.
pub fn hermitian_sqrt(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = m.clone().symmetric_eigen();
    let vecs = &eig.eigenvectors;
    let n = m.nrows();
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vecs[(i, k)] * roots[k] * vecs[(j, k)].conj())
            .sum()
    })
}

pub fn hermitian_sqrt2(m: &Op2) -> Op2 {
    let root = hermitian_sqrt(&to_dynamic(m));
    Op2::new(root[(0, 0)], root[(0, 1)], root[(1, 0)], root[(1, 1)])
}
