#![allow(dead_code)]

use gatenet_core::operators::{CMatrix, HermitianOperator, Pauli, PauliString, C64};

const AXES: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// Pauli string with index digits (base 4, site 0 most significant).
pub fn pauli_from_index(num_qubits: usize, mut idx: usize) -> PauliString {
    let mut axes = vec![Pauli::I; num_qubits];
    for site in (0..num_qubits).rev() {
        axes[site] = AXES[idx % 4];
        idx /= 4;
    }
    PauliString::from_axes(&axes)
}

/// Operator with one coefficient per Pauli string (length 4^n).
pub fn op_from_coeffs(num_qubits: usize, coeffs: &[f64]) -> HermitianOperator {
    HermitianOperator::from_terms(
        num_qubits,
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| (pauli_from_index(num_qubits, k), c)),
    )
}

/// `exp(-i H)` by scaling and squaring a truncated Taylor series.
pub fn expm_minus_i(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    let norm: f64 = h.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let s = (norm.log2().ceil() as i32 + 4).max(0);
    let a = h * C64::new(0.0, -1.0 / 2f64.powi(s));
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
