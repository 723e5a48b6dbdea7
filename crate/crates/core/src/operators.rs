//! N-qubit operator algebra.
//!
//! Basis ordering: computational basis `|q_0 q_1 ... q_{N-1}>` with site 0 the
//! most significant bit of the matrix index. Every dense matrix in the crate
//! follows this convention.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest register for which dense matrices are materialized.
pub const MAX_DENSE_QUBITS: usize = 12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest absolute entry of `m - m^dag`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Largest absolute entry of `U^dag U - I`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let id = CMatrix::identity(m.nrows(), m.ncols());
    max_abs_diff(&prod, &id)
}

pub(crate) fn qubits_for_dim(dim: usize) -> Option<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        None
    } else {
        Some(dim.trailing_zeros() as usize)
    }
}

/// Kronecker product, `a` being the most significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_lowercase() {
            'i' => Some(Pauli::I),
            'x' => Some(Pauli::X),
            'y' => Some(Pauli::Y),
            'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// A tensor product of single-site Pauli matrices, stored as X/Z bit masks.
///
/// Bit `num_qubits - 1 - site` of each mask belongs to `site`, so the masks
/// act directly on matrix indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    num_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> PauliString {
        assert!((1..=63).contains(&num_qubits), "unsupported qubit count {num_qubits}");
        PauliString { num_qubits, x: 0, z: 0 }
    }

    pub fn from_axes(axes: &[Pauli]) -> PauliString {
        let mut p = PauliString::identity(axes.len());
        for (site, &a) in axes.iter().enumerate() {
            p.set(site, a);
        }
        p
    }

    /// `axis` on a single site, identity elsewhere.
    pub fn single(num_qubits: usize, site: usize, axis: Pauli) -> PauliString {
        let mut p = PauliString::identity(num_qubits);
        p.set(site, axis);
        p
    }

    pub fn pair(num_qubits: usize, a: (usize, Pauli), b: (usize, Pauli)) -> PauliString {
        let mut p = PauliString::single(num_qubits, a.0, a.1);
        p.set(b.0, b.1);
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn bit(&self, site: usize) -> u64 {
        assert!(site < self.num_qubits, "site {site} out of range");
        1u64 << (self.num_qubits - 1 - site)
    }

    pub fn set(&mut self, site: usize, axis: Pauli) {
        let b = self.bit(site);
        let (x, z) = axis.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn axis(&self, site: usize) -> Pauli {
        let b = self.bit(site);
        Pauli::from_bits(self.x & b != 0, self.z & b != 0)
    }

    pub fn axes(&self) -> Vec<Pauli> {
        (0..self.num_qubits).map(|s| self.axis(s)).collect()
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s.is_multiple_of(2)
    }

    /// `self * other = phase * result`.
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        let out = PauliString {
            num_qubits: self.num_qubits,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // P = i^{#Y} X^x Z^z, and Z^a X^b = (-1)^{a.b} X^b Z^a.
        let swap_sign = (self.z & other.x).count_ones();
        let i_pow = self.y_count() as i64 + other.y_count() as i64 - out.y_count() as i64
            + 2 * swap_sign as i64;
        (i_power(i_pow), out)
    }

    /// Matrix element `<row|P|col>`; each column has exactly one nonzero entry at
    /// `row = col ^ x_mask`.
    pub fn column_entry(&self, col: usize) -> (usize, C64) {
        let row = col ^ self.x as usize;
        let sign = (self.z & col as u64).count_ones();
        let mut v = i_power(self.y_count() as i64);
        if sign % 2 == 1 {
            v = -v;
        }
        (row, v)
    }

    /// Pad with identities: site `i` of `self` goes to `sites[i]` of a
    /// `total`-qubit string.
    pub fn embed(&self, sites: &[usize], total: usize) -> Result<PauliString> {
        validate_subset(sites, total)?;
        if sites.len() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: sites.len(),
            });
        }
        let mut out = PauliString::identity(total);
        for (i, &s) in sites.iter().enumerate() {
            out.set(s, self.axis(i));
        }
        Ok(out)
    }
}

fn i_power(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.axes() {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<PauliString> {
        let axes = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidInput(format!("bad Pauli label `{c}`"))))
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(Error::InvalidInput("empty Pauli string".into()));
        }
        Ok(PauliString::from_axes(&axes))
    }
}

/// Dense matrix of a Pauli string (Kronecker product in site order).
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    assert!(p.num_qubits() <= MAX_DENSE_QUBITS, "too many qubits for a dense matrix");
    let dim = 1usize << p.num_qubits();
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (row, v) = p.column_entry(col);
        m[(row, col)] = v;
    }
    m
}

fn validate_subset(sites: &[usize], total: usize) -> Result<()> {
    let mut seen = vec![false; total];
    for &s in sites {
        if s >= total {
            return Err(Error::InvalidSites(format!("site {s} outside 0..{total}")));
        }
        if seen[s] {
            return Err(Error::InvalidSites(format!("site {s} listed twice")));
        }
        seen[s] = true;
    }
    Ok(())
}

/// A Hermitian operator kept as real coefficients over Pauli strings, with the
/// dense matrix built on first use.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    num_qubits: usize,
    coeffs: BTreeMap<PauliString, f64>,
    dense: OnceLock<CMatrix>,
}

impl PartialEq for HermitianOperator {
    fn eq(&self, other: &Self) -> bool {
        self.num_qubits == other.num_qubits && self.coeffs == other.coeffs
    }
}

impl HermitianOperator {
    pub fn zero(num_qubits: usize) -> HermitianOperator {
        HermitianOperator {
            num_qubits,
            coeffs: BTreeMap::new(),
            dense: OnceLock::new(),
        }
    }

    pub fn identity(num_qubits: usize) -> HermitianOperator {
        HermitianOperator::from_pauli(PauliString::identity(num_qubits), 1.0)
    }

    pub fn from_pauli(p: PauliString, coeff: f64) -> HermitianOperator {
        let mut op = HermitianOperator::zero(p.num_qubits());
        op.add_term(p, coeff);
        op
    }

    /// Sum of `coeff * string`; repeated strings accumulate.
    pub fn from_terms<I>(num_qubits: usize, terms: I) -> HermitianOperator
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut op = HermitianOperator::zero(num_qubits);
        for (p, c) in terms {
            op.add_term(p, c);
        }
        op
    }

    /// Pauli decomposition of a dense Hermitian matrix: `c_s = Re Tr(P_s M) / 2^N`.
    pub fn from_dense(m: &CMatrix) -> Result<HermitianOperator> {
        let n = qubits_for_dim(m.nrows())
            .filter(|_| m.is_square())
            .ok_or_else(|| Error::InvalidInput(format!("{}x{} is not a qubit operator", m.nrows(), m.ncols())))?;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::InvalidInput("too many qubits".into()));
        }
        let defect = hermiticity_defect(m);
        if defect > 1e-9 {
            return Err(Error::NotHermitian(defect));
        }
        let dim = 1usize << n;
        let norm = dim as f64;
        let mut coeffs = BTreeMap::new();
        for x in 0..dim as u64 {
            for z in 0..dim as u64 {
                let p = PauliString { num_qubits: n, x, z };
                // Tr(P M) = sum_col P[row, col] M[col, row]
                let mut tr = ZERO;
                for col in 0..dim {
                    let (row, v) = p.column_entry(col);
                    tr += v * m[(col, row)];
                }
                let c = tr.re / norm;
                if c.abs() > 1e-15 {
                    coeffs.insert(p, c);
                }
            }
        }
        Ok(HermitianOperator {
            num_qubits: n,
            coeffs,
            dense: OnceLock::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    fn add_term(&mut self, p: PauliString, c: f64) {
        assert_eq!(p.num_qubits(), self.num_qubits, "Pauli string size mismatch");
        if c == 0.0 {
            return;
        }
        let e = self.coeffs.entry(p).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.coeffs.remove(&p);
        }
        self.dense = OnceLock::new();
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.coeffs.get(p).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.coeffs.iter().map(|(p, &c)| (p, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest Pauli weight present (0 for multiples of the identity).
    pub fn max_weight(&self) -> usize {
        self.coeffs.keys().map(|p| p.weight()).max().unwrap_or(0)
    }

    /// Drop coefficients with magnitude at or below `tol`.
    pub fn pruned(&self, tol: f64) -> HermitianOperator {
        HermitianOperator::from_terms(
            self.num_qubits,
            self.coeffs.iter().filter(|(_, c)| c.abs() > tol).map(|(p, &c)| (*p, c)),
        )
    }

    /// Coefficient of the identity, i.e. `Tr(A)/2^N`.
    pub fn trace_part(&self) -> f64 {
        self.coeff(&PauliString::identity(self.num_qubits))
    }

    pub fn traceless_part(&self) -> HermitianOperator {
        let id = PauliString::identity(self.num_qubits);
        HermitianOperator::from_terms(
            self.num_qubits,
            self.coeffs.iter().filter(|(p, _)| **p != id).map(|(p, &c)| (*p, c)),
        )
    }

    /// Normalized Hilbert-Schmidt norm `sqrt(Tr(A^2)/2^N)`.
    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> HermitianOperator {
        HermitianOperator::from_terms(self.num_qubits, self.coeffs.iter().map(|(p, &c)| (*p, s * c)))
    }

    /// Dense `2^N x 2^N` matrix, built once and cached.
    pub fn dense(&self) -> &CMatrix {
        self.dense.get_or_init(|| {
            assert!(self.num_qubits <= MAX_DENSE_QUBITS, "too many qubits for a dense matrix");
            let dim = self.dim();
            let mut m = CMatrix::zeros(dim, dim);
            for (p, &c) in &self.coeffs {
                for col in 0..dim {
                    let (row, v) = p.column_entry(col);
                    m[(row, col)] += v * c;
                }
            }
            m
        })
    }

    fn check_same(&self, other: &HermitianOperator) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        Ok(())
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;

    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        let mut out = self.clone();
        for (p, &c) in &rhs.coeffs {
            out.add_term(*p, c);
        }
        out
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;

    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        self + &rhs.scaled(-1.0)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;

    fn neg(self) -> HermitianOperator {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;

    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scaled(rhs)
    }
}

/// Normalized Hilbert-Schmidt inner product `Tr(ab)/2^N`.
pub fn hs_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.check_same(b)?;
    let (small, large) = if a.coeffs.len() <= b.coeffs.len() { (a, b) } else { (b, a) };
    Ok(small
        .coeffs
        .iter()
        .map(|(p, c)| c * large.coeff(p))
        .sum())
}

/// Hermitized commutator `i(ab - ba)`.
pub fn comm_h(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    a.check_same(b)?;
    let mut acc: BTreeMap<PauliString, f64> = BTreeMap::new();
    for (p, &c) in &a.coeffs {
        for (q, &d) in &b.coeffs {
            if p.commutes_with(q) {
                continue;
            }
            // [P, Q] = 2 P Q for anticommuting strings; the phase is +-i.
            let (phase, r) = p.mul(q);
            let v = -2.0 * phase.im * c * d;
            *acc.entry(r).or_insert(0.0) += v;
        }
    }
    Ok(HermitianOperator::from_terms(
        a.num_qubits,
        acc.into_iter().filter(|(_, v)| *v != 0.0),
    ))
}

/// Embed an operator acting on `sites` (in that order) into `total` qubits.
pub fn embed(op: &HermitianOperator, sites: &[usize], total: usize) -> Result<HermitianOperator> {
    let mut out = HermitianOperator::zero(total);
    validate_subset(sites, total)?;
    if sites.len() != op.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: op.num_qubits,
            found: sites.len(),
        });
    }
    for (p, &c) in &op.coeffs {
        out.add_term(p.embed(sites, total)?, c);
    }
    Ok(out)
}

/// Bits of `index` (a `total`-qubit basis label) at `sites`, packed with
/// `sites[0]` most significant.
fn gather_bits(index: usize, sites: &[usize], total: usize) -> usize {
    sites
        .iter()
        .fold(0, |acc, &s| (acc << 1) | ((index >> (total - 1 - s)) & 1))
}

/// Dense embedding `M_sites (x) 1_rest` of an arbitrary matrix.
pub fn embed_matrix(m: &CMatrix, sites: &[usize], total: usize) -> Result<CMatrix> {
    validate_subset(sites, total)?;
    if m.nrows() != 1 << sites.len() || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1 << sites.len(),
            found: m.nrows(),
        });
    }
    let rest: Vec<usize> = (0..total).filter(|s| !sites.contains(s)).collect();
    let dim = 1usize << total;
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        let rr = gather_bits(r, &rest, total);
        let rs = gather_bits(r, sites, total);
        for c in 0..dim {
            if gather_bits(c, &rest, total) == rr {
                out[(r, c)] = m[(rs, gather_bits(c, sites, total))];
            }
        }
    }
    Ok(out)
}

/// Partial trace of an arbitrary `2^total`-dimensional matrix, keeping `keep`
/// (ascending site order defines the output basis).
pub fn partial_trace_matrix(m: &CMatrix, total: usize, keep: &[usize]) -> Result<CMatrix> {
    if m.nrows() != 1 << total || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: 1 << total,
            found: m.nrows(),
        });
    }
    validate_subset(keep, total)?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    let traced: Vec<usize> = (0..total).filter(|s| !keep_sorted.contains(s)).collect();
    let dk = 1usize << keep_sorted.len();
    let dt = 1usize << traced.len();
    let compose = |k: usize, t: usize| -> usize {
        let mut idx = 0usize;
        for (i, &s) in keep_sorted.iter().enumerate() {
            let bit = (k >> (keep_sorted.len() - 1 - i)) & 1;
            idx |= bit << (total - 1 - s);
        }
        for (i, &s) in traced.iter().enumerate() {
            let bit = (t >> (traced.len() - 1 - i)) & 1;
            idx |= bit << (total - 1 - s);
        }
        idx
    };
    let mut out = CMatrix::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += m[(compose(r, t), compose(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// A matrix validated as unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(m: CMatrix) -> Result<UnitaryMatrix> {
        UnitaryMatrix::with_tolerance(m, Self::TOLERANCE)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<UnitaryMatrix> {
        if !m.is_square() || qubits_for_dim(m.nrows()).is_none() {
            return Err(Error::InvalidInput(format!(
                "{}x{} is not a square power-of-two matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = unitarity_defect(&m);
        if !(defect < tol) {
            return Err(Error::NotUnitary(defect));
        }
        Ok(UnitaryMatrix(m))
    }

    pub fn identity(dim: usize) -> UnitaryMatrix {
        UnitaryMatrix(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        qubits_for_dim(self.dim()).expect("validated on construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    /// Product of two unitaries (`self * rhs`), skipping revalidation.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &rhs.0)
    }

    pub(crate) fn from_trusted(m: CMatrix) -> UnitaryMatrix {
        debug_assert!(unitarity_defect(&m) < 1e-8);
        UnitaryMatrix(m)
    }
}

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<DensityMatrix> {
        if !m.is_square() || qubits_for_dim(m.nrows()).is_none() {
            return Err(Error::InvalidDensity(format!("bad shape {}x{}", m.nrows(), m.ncols())));
        }
        let herm = hermiticity_defect(&m);
        if herm > 1e-12 {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let sym = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn pure(psi: &CVector) -> Result<DensityMatrix> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm {norm} != 1")));
        }
        DensityMatrix::new(psi * psi.adjoint())
    }

    /// Computational basis projector `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> DensityMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        DensityMatrix(m)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        qubits_for_dim(self.dim()).expect("validated on construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub(crate) fn from_trusted(m: CMatrix) -> DensityMatrix {
        DensityMatrix(m)
    }
}

/// Reduced state on `keep` (ascending order); errors on invalid site sets.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), rho.num_qubits(), keep)?;
    Ok(DensityMatrix(reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn op(s: &str) -> HermitianOperator {
        HermitianOperator::from_pauli(ps(s), 1.0)
    }

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0))))
    }

    #[test]
    fn pauli_matrices_follow_site_order() {
        let x = pauli_matrix(&ps("X"));
        assert_eq!(x, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        assert_eq!(pauli_matrix(&ps("IZ")), diag(&[1.0, -1.0, 1.0, -1.0]));
        assert_eq!(pauli_matrix(&ps("ZZ")), diag(&[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(pauli_matrix(&ps("ZI")), diag(&[1.0, 1.0, -1.0, -1.0]));
        let y = pauli_matrix(&ps("Y"));
        assert_eq!(y, CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]));
    }

    #[test]
    fn string_product_matches_dense() {
        let labels = ["XYZI", "ZZXY", "YIYX", "IXZZ", "YYYY"];
        for a in labels {
            for b in labels {
                let (phase, r) = ps(a).mul(&ps(b));
                let lhs = pauli_matrix(&ps(a)) * pauli_matrix(&ps(b));
                let rhs = pauli_matrix(&r) * phase;
                assert!(max_abs_diff(&lhs, &rhs) < 1e-15, "{a}*{b}");
            }
        }
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&op("X"), &op("X")).unwrap(), 1.0);
        assert_eq!(hs_inner(&op("X"), &op("Z")).unwrap(), 0.0);
        assert_eq!(hs_inner(&op("ZZ"), &op("ZZ")).unwrap(), 1.0);
        assert!(matches!(hs_inner(&op("X"), &op("ZZ")), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn hs_inner_agrees_with_trace() {
        let a = HermitianOperator::from_terms(2, [(ps("XY"), 0.3), (ps("ZI"), -1.2), (ps("II"), 0.5)]);
        let b = HermitianOperator::from_terms(2, [(ps("XY"), 2.0), (ps("IZ"), 0.7), (ps("II"), 1.0)]);
        let tr = (a.dense() * b.dense()).trace().re / 4.0;
        assert_abs_diff_eq!(hs_inner(&a, &b).unwrap(), tr, epsilon = 1e-14);
    }

    #[test]
    fn comm_h_examples() {
        let c = comm_h(&op("X"), &op("Y")).unwrap();
        assert_eq!(c, op("Z").scaled(-2.0));
        assert!(comm_h(&op("X"), &op("X")).unwrap().is_zero());
        let zz = embed(&op("ZZ"), &[0, 1], 4).unwrap();
        let xx = embed(&op("XX"), &[2, 3], 4).unwrap();
        assert!(comm_h(&zz, &xx).unwrap().is_zero());
    }

    #[test]
    fn comm_h_matches_dense_commutator() {
        let a = HermitianOperator::from_terms(3, [(ps("XYZ"), 0.3), (ps("ZIX"), -1.1), (ps("IYI"), 0.4)]);
        let b = HermitianOperator::from_terms(3, [(ps("YYI"), 0.9), (ps("ZZZ"), 0.2), (ps("XII"), -0.6)]);
        let c = comm_h(&a, &b).unwrap();
        let expect = (a.dense() * b.dense() - b.dense() * a.dense()) * I;
        assert!(max_abs_diff(c.dense(), &expect) < 1e-14);
    }

    #[test]
    fn embed_examples() {
        let z0 = embed(&op("Z"), &[0], 2).unwrap();
        assert_eq!(*z0.dense(), diag(&[1.0, 1.0, -1.0, -1.0]));
        let x1 = embed(&op("X"), &[1], 2).unwrap();
        assert_eq!(*x1.dense(), kron(&pauli_matrix(&ps("I")), &pauli_matrix(&ps("X"))));
        assert!(matches!(embed(&op("X"), &[2], 2), Err(Error::InvalidSites(_))));
        // the dense embedding agrees with coefficient padding
        let a = HermitianOperator::from_terms(2, [(ps("XY"), 0.3), (ps("ZI"), -1.2)]);
        let e = embed(&a, &[2, 0], 3).unwrap();
        let d = embed_matrix(a.dense(), &[2, 0], 3).unwrap();
        assert!(max_abs_diff(e.dense(), &d) < 1e-15);
    }

    #[test]
    fn embed_then_trace_keeps_expectation() {
        let a = HermitianOperator::from_terms(1, [(ps("X"), 0.7), (ps("Z"), 0.2)]);
        let rho_s = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
        ))
        .unwrap();
        let rho_rest = DensityMatrix::basis(2, 1);
        let full = rho_s.tensor(&rho_rest);
        let big = embed(&a, &[0], 2).unwrap();
        let lhs = (big.dense() * full.matrix()).trace();
        let rhs = (a.dense() * rho_s.matrix()).trace();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        let rho = DensityMatrix::pure(&bell).unwrap();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert!(max_abs_diff(red.matrix(), &diag(&[0.5, 0.5])) < 1e-15);

        let prod = DensityMatrix::basis(2, 0).tensor(&DensityMatrix::basis(2, 1));
        let red = partial_trace(&prod, &[0]).unwrap();
        assert_eq!(*red.matrix(), diag(&[1.0, 0.0]));
        let red = partial_trace(&prod, &[1]).unwrap();
        assert_eq!(*red.matrix(), diag(&[0.0, 1.0]));

        let same = partial_trace(&prod, &[0, 1]).unwrap();
        assert_eq!(same, prod);
        assert!(matches!(partial_trace(&prod, &[3]), Err(Error::InvalidSites(_))));
    }

    #[test]
    fn dense_round_trip() {
        let a = HermitianOperator::from_terms(2, [(ps("XY"), 0.3), (ps("ZI"), -1.2), (ps("YY"), 2.5)]);
        let back = HermitianOperator::from_dense(a.dense()).unwrap();
        assert!(max_abs_diff(back.dense(), a.dense()) < 1e-12);
        for (p, c) in a.terms() {
            assert_abs_diff_eq!(back.coeff(p), c, epsilon = 1e-14);
        }
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(diag(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn unitary_validation() {
        assert!(UnitaryMatrix::new(pauli_matrix(&ps("XY"))).is_ok());
        let mut m = pauli_matrix(&ps("X"));
        m[(0, 1)] = C64::new(1.01, 0.0);
        assert!(matches!(UnitaryMatrix::new(m), Err(Error::NotUnitary(_))));
    }
}
