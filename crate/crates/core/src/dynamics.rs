//! Exact propagation of the static network.
//!
//! The propagator over the (absorbed) unit time is `U = exp(-i H)`. That sign
//! is the one under which a two-qubit Heisenberg coupling `J = pi/2` yields
//! `sqrt(SWAP)` rather than its adjoint; the remote-logic presets depend on it.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::network::{AncillaState, NetworkSpec, ParameterVector};
use crate::operators::{
    hermiticity_defect, max_abs_diff, qubits_for_dim, CMatrix, CVector, DensityMatrix,
    HermitianOperator, UnitaryMatrix, C64, ZERO,
};

/// Eigenvalue gaps below this use the diagonal divided-difference formula.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Spectral decomposition `H = V diag(e) V^dag`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(e);
        }
        scaled * v.adjoint()
    }

    /// `V diag(exp(-i e)) V^dag`.
    pub fn propagator(&self) -> UnitaryMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let phase = C64::from_polar(1.0, -e);
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= phase);
        }
        UnitaryMatrix::from_trusted(scaled * v.adjoint())
    }

    /// Directional derivative of `lambda -> exp(-i H(lambda))` along `dh`.
    pub fn propagator_derivative(&self, dh: &CMatrix) -> Result<CMatrix> {
        let n = self.eigenvalues.len();
        if dh.nrows() != n || dh.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: dh.nrows() });
        }
        let v = &self.eigenvectors;
        let mut m = v.adjoint() * dh * v;
        let phases: Vec<C64> = self.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e)).collect();
        for a in 0..n {
            for b in 0..n {
                let (ea, eb) = (self.eigenvalues[a], self.eigenvalues[b]);
                let gamma = if (ea - eb).abs() < DEGENERACY_TOL {
                    C64::new(0.0, -1.0) * phases[a]
                } else {
                    (phases[a] - phases[b]) / (ea - eb)
                };
                m[(a, b)] *= gamma;
            }
        }
        Ok(v * m * v.adjoint())
    }
}

/// Full spectral decomposition of a Hermitian operator.
pub fn eig_hermitian(h: &HermitianOperator) -> Result<EigenSystem> {
    eig_hermitian_matrix(h.dense())
}

/// Rejects inputs whose Hermiticity defect exceeds `1e-10`.
pub fn eig_hermitian_matrix(h: &CMatrix) -> Result<EigenSystem> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    let defect = hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSystem { eigenvalues, eigenvectors })
}

/// `exp(-i H)`.
pub fn propagator(h: &HermitianOperator) -> Result<UnitaryMatrix> {
    Ok(eig_hermitian(h)?.propagator())
}

/// Derivative of `exp(-i H)` along `dh` via divided differences.
pub fn propagator_derivative(h: &HermitianOperator, dh: &HermitianOperator) -> Result<CMatrix> {
    if h.num_qubits() != dh.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: h.num_qubits(),
            found: dh.num_qubits(),
        });
    }
    eig_hermitian(h)?.propagator_derivative(dh.dense())
}

fn check_channel_dims(spec: &NetworkSpec, ancilla: &AncillaState) -> Result<()> {
    if ancilla.dim() != spec.ancilla_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.ancilla_dim(),
            found: ancilla.dim(),
        });
    }
    Ok(())
}

/// Kraus operators `K_a = (1 (x) <a|) U (1 (x) |psi_A>)` of the reduced channel,
/// for a register-first propagator.
pub fn kraus_operators(u: &CMatrix, psi_a: &CVector, dim_q: usize) -> Vec<CMatrix> {
    let dim_a = psi_a.len();
    (0..dim_a)
        .map(|a| {
            CMatrix::from_fn(dim_q, dim_q, |i, k| {
                let row = i * dim_a + a;
                (0..dim_a).fold(ZERO, |acc, b| acc + u[(row, k * dim_a + b)] * psi_a[b])
            })
        })
        .collect()
}

/// Trace over the trailing `dim_a` factor of a register-first matrix.
fn trace_out_ancilla(m: &CMatrix, dim_q: usize, dim_a: usize) -> CMatrix {
    CMatrix::from_fn(dim_q, dim_q, |i, j| {
        (0..dim_a).fold(ZERO, |acc, a| acc + m[(i * dim_a + a, j * dim_a + a)])
    })
}

/// `Tr_A[U (rho_Q (x) |psi_A><psi_A|) U^dag]`.
pub fn apply_channel(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    ancilla: &AncillaState,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_channel_dims(spec, ancilla)?;
    if rho.dim() != spec.register_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.register_dim(),
            found: rho.dim(),
        });
    }
    let u = propagator(&spec.assemble_hamiltonian(lambda)?)?;
    let psi = ancilla.amplitudes();
    let rho_a = psi * psi.adjoint();
    let full = rho.matrix().kronecker(&rho_a);
    let evolved = u.matrix() * full * u.matrix().adjoint();
    Ok(DensityMatrix::from_trusted(trace_out_ancilla(
        &evolved,
        spec.register_dim(),
        spec.ancilla_dim(),
    )))
}

/// Channel matrix elements `E^{ij,kl} = <q_i| E[|q_k><q_l|] |q_j>`, stored with
/// row index `i*D + j` and column index `k*D + l`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    data: CMatrix,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.data[(i * self.dim + j, k * self.dim + l)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    /// Superoperator of the unitary channel `rho -> V rho V^dag`.
    pub fn from_unitary(v: &CMatrix) -> Superoperator {
        let d = v.nrows();
        let data = CMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, j, k, l) = (r / d, r % d, c / d, c % d);
            v[(i, k)] * v[(j, l)].conj()
        });
        Superoperator { dim: d, data }
    }

    /// Action on an arbitrary register operator.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim;
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
        }
        let flat = CVector::from_fn(d * d, |r, _| rho[(r / d, r % d)]);
        let out = &self.data * flat;
        Ok(CMatrix::from_fn(d, d, |i, j| out[i * d + j]))
    }

    /// Choi matrix `C[(k,i),(l,j)] = E^{ij,kl}`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        CMatrix::from_fn(d * d, d * d, |r, c| {
            let (k, i, l, j) = (r / d, r % d, c / d, c % d);
            self.get(i, j, k, l)
        })
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        let c = self.choi();
        let sym = (&c + c.adjoint()) * C64::new(0.5, 0.0);
        sym.symmetric_eigenvalues().min()
    }

    /// `max_{kl} |sum_i E^{ii,kl} - delta_kl|`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for k in 0..d {
            for l in 0..d {
                let s = (0..d).fold(ZERO, |acc, i| acc + self.get(i, i, k, l));
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((s - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Superoperator for a given register-first propagator and ancilla vector.
pub fn superoperator_from_propagator(u: &CMatrix, psi_a: &CVector, dim_q: usize) -> Superoperator {
    let dim_a = psi_a.len();
    let rho_a = psi_a * psi_a.adjoint();
    let mut data = CMatrix::zeros(dim_q * dim_q, dim_q * dim_q);
    // Column (k,l) is Tr_A[U (|k><l| (x) rho_A) U^dag] = Tr_A[W_k rho_A W_l^dag].
    let blocks: Vec<CMatrix> = (0..dim_q)
        .map(|k| u.columns(k * dim_a, dim_a).into_owned())
        .collect();
    let left: Vec<CMatrix> = blocks.iter().map(|w| w * &rho_a).collect();
    for k in 0..dim_q {
        for l in 0..dim_q {
            let evolved = &left[k] * blocks[l].adjoint();
            let reduced = trace_out_ancilla(&evolved, dim_q, dim_a);
            let col = k * dim_q + l;
            for i in 0..dim_q {
                for j in 0..dim_q {
                    data[(i * dim_q + j, col)] = reduced[(i, j)];
                }
            }
        }
    }
    Superoperator { dim: dim_q, data }
}

pub fn superoperator(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    ancilla: &AncillaState,
) -> Result<Superoperator> {
    check_channel_dims(spec, ancilla)?;
    let u = propagator(&spec.assemble_hamiltonian(lambda)?)?;
    Ok(superoperator_from_propagator(u.matrix(), ancilla.amplitudes(), spec.register_dim()))
}

/// Outcome of the operator-Schmidt test across a register/ancilla cut.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub factorizes: bool,
    /// Operator Schmidt coefficients, descending.
    pub schmidt_coefficients: Vec<f64>,
    /// Best product approximation `U ~ U_Q (x) V_A`; `U_Q` has its first
    /// nonzero entry real positive.
    pub register_factor: CMatrix,
    pub ancilla_factor: CMatrix,
}

impl Factorization {
    /// Ratio of the second to the first Schmidt coefficient.
    pub fn schmidt_ratio(&self) -> f64 {
        match self.schmidt_coefficients.as_slice() {
            [first, second, ..] if *first > 0.0 => second / first,
            _ => 0.0,
        }
    }
}

/// Tests whether `U = U_Q (x) V_A` across the cut `register | rest`.
pub fn factorization_check(u: &UnitaryMatrix, register: &[usize]) -> Result<Factorization> {
    let total = u.num_qubits();
    let mut seen = vec![false; total];
    for &s in register {
        if s >= total || seen[s] {
            return Err(Error::InvalidSites(format!("bad register site {s} for {total} qubits")));
        }
        seen[s] = true;
    }
    if register.is_empty() || register.len() == total {
        return Err(Error::InvalidSites("split must leave both sides nonempty".into()));
    }
    let rest: Vec<usize> = (0..total).filter(|s| !seen[*s]).collect();
    let dq = 1usize << register.len();
    let da = 1usize << rest.len();
    let gather = |idx: usize, sites: &[usize]| -> usize {
        sites
            .iter()
            .fold(0, |acc, &s| (acc << 1) | ((idx >> (total - 1 - s)) & 1))
    };
    // Realignment R[(iQ,kQ),(jA,lA)] = U[(iQ jA),(kQ lA)].
    let dim = u.dim();
    let m = u.matrix();
    let mut r = CMatrix::zeros(dq * dq, da * da);
    for row in 0..dim {
        let (iq, ja) = (gather(row, register), gather(row, &rest));
        for col in 0..dim {
            let (kq, la) = (gather(col, register), gather(col, &rest));
            r[(iq * dq + kq, ja * da + la)] = m[(row, col)];
        }
    }
    let svd = r.svd(true, true);
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let coeffs: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let top = order[0];
    let uvec = svd.u.as_ref().expect("requested").column(top).into_owned();
    let vvec = svd.v_t.as_ref().expect("requested").row(top).transpose();
    let mut a = CMatrix::from_fn(dq, dq, |i, k| uvec[i * dq + k]);
    let mut b = CMatrix::from_fn(da, da, |j, l| vvec[j * da + l]);
    let phase = a
        .iter()
        .find(|x| x.norm() > 1e-8)
        .map(|x| x.conj() / x.norm())
        .unwrap_or(C64::new(1.0, 0.0));
    let sq = (dq as f64).sqrt();
    a *= phase * sq;
    b *= phase.conj() * (coeffs[0] / sq);
    let factorizes = coeffs.len() < 2 || coeffs[1] < 1e-6 * coeffs[0];
    Ok(Factorization {
        factorizes,
        schmidt_coefficients: coeffs,
        register_factor: a,
        ancilla_factor: b,
    })
}

/// Number of qubits of a square power-of-two matrix.
pub fn matrix_qubits(m: &CMatrix) -> Option<usize> {
    if m.is_square() {
        qubits_for_dim(m.nrows())
    } else {
        None
    }
}

/// `max |P(H) P(-H) - I|`, exposed for diagnostics.
pub fn inverse_defect(h: &HermitianOperator) -> Result<f64> {
    let u = propagator(h)?;
    let v = propagator(&h.scaled(-1.0))?;
    let prod = u.matrix() * v.matrix();
    Ok(max_abs_diff(&prod, &CMatrix::identity(prod.nrows(), prod.ncols())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::operators::{kron, pauli_matrix, PauliString};
    use std::f64::consts::PI;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn eigenvalue_examples() {
        let z = HermitianOperator::from_pauli(ps("Z"), 1.0);
        let e = eig_hermitian(&z).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let zz = HermitianOperator::from_pauli(ps("ZZ"), PI / 4.0);
        let e = eig_hermitian(&zz).unwrap();
        let expect = [-PI / 4.0, -PI / 4.0, PI / 4.0, PI / 4.0];
        for (a, b) in e.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(eig_hermitian_matrix(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn propagator_examples() {
        let zero = HermitianOperator::zero(2);
        let u = propagator(&zero).unwrap();
        assert!(max_abs_diff(u.matrix(), &CMatrix::identity(4, 4)) < 1e-15);

        // h^x = pi: H = pi X / 2, exp(-i pi X / 2) = -i X
        let h = HermitianOperator::from_pauli(ps("X"), PI / 2.0);
        let u = propagator(&h).unwrap();
        let expect = pauli_matrix(&ps("X")) * C64::new(0.0, -1.0);
        assert!(max_abs_diff(u.matrix(), &expect) < 1e-14);
    }

    #[test]
    fn heisenberg_pair_is_sqrt_swap() {
        let j = PI / 2.0;
        let h = HermitianOperator::from_terms(
            2,
            ["XX", "YY", "ZZ"].iter().map(|s| (ps(s), j / 4.0)),
        );
        let u = propagator(&h).unwrap();
        let target = gates::sqrt_swap();
        // remove the global phase
        let t = target.unitary.matrix();
        let overlap = (t.adjoint() * u.matrix()).trace() / 4.0;
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        let aligned = t * overlap;
        assert!(max_abs_diff(u.matrix(), &aligned) < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let a = HermitianOperator::from_terms(1, [(ps("X"), 0.3), (ps("Z"), -0.8)]);
        let d = propagator_derivative(&HermitianOperator::zero(1), &a).unwrap();
        assert!(max_abs_diff(&d, &(a.dense() * C64::new(0.0, -1.0))) < 1e-14);

        let theta = 0.77;
        let h = HermitianOperator::from_pauli(ps("X"), theta / 2.0);
        let dh = HermitianOperator::from_pauli(ps("X"), 0.5);
        let d = propagator_derivative(&h, &dh).unwrap();
        let u = propagator(&h).unwrap();
        let expect = pauli_matrix(&ps("X")) * u.matrix() * C64::new(0.0, -0.5);
        assert!(max_abs_diff(&d, &expect) < 1e-14);
    }

    #[test]
    fn channel_identity_at_zero() {
        let spec = crate::network::NetworkSpec::from_json(
            r#"{"num_qubits":2,"register":[0],"ancillae":[1],
                "couplings":[{"sites":[0,1],"axes":"xx","group":"j"}]}"#,
        )
        .unwrap();
        let lambda = spec.params(vec![0.0]);
        let anc = spec.ancilla_state(&lambda).unwrap();
        let rho = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.3, 0.0), C64::new(0.1, 0.1), C64::new(0.1, -0.1), C64::new(0.7, 0.0)],
        ))
        .unwrap();
        let out = apply_channel(&spec, &lambda, &anc, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
        let e = superoperator(&spec, &lambda, &anc).unwrap();
        assert!(max_abs_diff(e.matrix(), &CMatrix::identity(4, 4)) < 1e-15);
    }

    #[test]
    fn unitary_superoperator_matches_definition() {
        let spec = crate::network::NetworkSpec::from_json(
            r#"{"num_qubits":2,"register":[0,1],
                "couplings":[{"sites":[0,1],"axes":"xy","group":"j"}],
                "fields":[{"site":0,"axis":"z","group":"h"}]}"#,
        )
        .unwrap();
        let lambda = spec.params(vec![0.9, -1.3]);
        let anc = spec.ancilla_state(&lambda).unwrap();
        let v = propagator(&spec.assemble_hamiltonian(&lambda).unwrap()).unwrap();
        let e = superoperator(&spec, &lambda, &anc).unwrap();
        let direct = Superoperator::from_unitary(v.matrix());
        assert!(max_abs_diff(e.matrix(), direct.matrix()) < 1e-14);
    }

    #[test]
    fn factorization_examples() {
        let x = pauli_matrix(&ps("X"));
        let z = pauli_matrix(&ps("Z"));
        let u = UnitaryMatrix::new(kron(&x, &z)).unwrap();
        let f = factorization_check(&u, &[0]).unwrap();
        assert!(f.factorizes);
        assert!(max_abs_diff(&f.register_factor, &x) < 1e-12);
        assert!(max_abs_diff(&f.ancilla_factor, &z) < 1e-12);

        let cnot = UnitaryMatrix::new(gates::cnot_matrix()).unwrap();
        let f = factorization_check(&cnot, &[0]).unwrap();
        assert!(!f.factorizes);
        assert!(factorization_check(&cnot, &[0, 1]).is_err());
        assert!(factorization_check(&cnot, &[2]).is_err());
    }

    #[test]
    fn factorization_non_contiguous_split() {
        // X on site 1 (register), Z (x) Y on sites 0, 2
        let u = kron(&kron(&pauli_matrix(&ps("Z")), &pauli_matrix(&ps("X"))), &pauli_matrix(&ps("Y")));
        let f = factorization_check(&UnitaryMatrix::new(u).unwrap(), &[1]).unwrap();
        assert!(f.factorizes);
        assert!(max_abs_diff(&f.register_factor, &pauli_matrix(&ps("X"))) < 1e-12);
        let rebuilt = kron(&f.ancilla_factor, &CMatrix::identity(1, 1));
        assert!(max_abs_diff(&rebuilt, &pauli_matrix(&ps("ZY"))) < 1e-12);
    }
}
