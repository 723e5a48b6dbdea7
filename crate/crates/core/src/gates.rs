//! Target gates and their principal logarithms.

use std::path::Path;

use nalgebra::Schur;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{
    embed_matrix, max_abs_diff, unitarity_defect, CMatrix, HermitianOperator, UnitaryMatrix, C64,
};

/// Unitarity tolerance for user-supplied gate files.
pub const CUSTOM_GATE_TOL: f64 = 1e-8;

/// A target unitary on the register plus optional symmetry operators `S`
/// with `[U, S] = 0`.
#[derive(Clone, Debug)]
pub struct GateTarget {
    pub name: String,
    pub unitary: UnitaryMatrix,
    pub symmetries: Vec<UnitaryMatrix>,
}

impl GateTarget {
    pub fn new(name: impl Into<String>, unitary: UnitaryMatrix, symmetries: Vec<UnitaryMatrix>) -> Result<GateTarget> {
        for s in &symmetries {
            if s.dim() != unitary.dim() {
                return Err(Error::DimensionMismatch {
                    expected: unitary.dim(),
                    found: s.dim(),
                });
            }
            let u = unitary.matrix();
            let comm = max_abs_diff(&(u * s.matrix()), &(s.matrix() * u));
            if comm >= 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "declared symmetry does not commute with the gate (defect {comm:.3e})"
                )));
            }
        }
        Ok(GateTarget {
            name: name.into(),
            unitary,
            symmetries,
        })
    }

    pub fn dim(&self) -> usize {
        self.unitary.dim()
    }

    pub fn num_qubits(&self) -> usize {
        self.unitary.num_qubits()
    }

    /// Same gate times a global phase.
    pub fn with_phase(&self, phi: f64) -> GateTarget {
        let m = self.unitary.matrix() * C64::from_polar(1.0, phi);
        GateTarget {
            name: self.name.clone(),
            unitary: UnitaryMatrix::from_trusted(m),
            symmetries: self.symmetries.clone(),
        }
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Permutation matrix sending basis state `k` to `perm[k]`.
pub fn permutation_matrix(perm: &[usize]) -> CMatrix {
    let n = perm.len();
    let mut m = CMatrix::zeros(n, n);
    for (k, &p) in perm.iter().enumerate() {
        m[(p, k)] = real(1.0);
    }
    m
}

pub fn swap_matrix() -> CMatrix {
    permutation_matrix(&[0, 2, 1, 3])
}

pub fn cnot_matrix() -> CMatrix {
    permutation_matrix(&[0, 1, 3, 2])
}

/// CCNOT with controls on sites 0, 1 and target on site 2.
pub fn toffoli() -> GateTarget {
    let u = permutation_matrix(&[0, 1, 2, 3, 4, 5, 7, 6]);
    let swap_controls = embed_matrix(&swap_matrix(), &[0, 1], 3).expect("static sites");
    GateTarget::new(
        "toffoli",
        UnitaryMatrix::from_trusted(u),
        vec![UnitaryMatrix::from_trusted(swap_controls)],
    )
    .expect("library gate")
}

/// CSWAP with control on site 0, swapping sites 1 and 2.
pub fn fredkin() -> GateTarget {
    let u = permutation_matrix(&[0, 1, 2, 3, 4, 6, 5, 7]);
    let swap_targets = embed_matrix(&swap_matrix(), &[1, 2], 3).expect("static sites");
    GateTarget::new(
        "fredkin",
        UnitaryMatrix::from_trusted(u),
        vec![UnitaryMatrix::from_trusted(swap_targets)],
    )
    .expect("library gate")
}

/// `sqrt(SWAP)`: identity on |00>, |11>; `[[(1+i)/2, (1-i)/2], [(1-i)/2, (1+i)/2]]`
/// on span{|01>, |10>}.
pub fn sqrt_swap() -> GateTarget {
    let p = C64::new(0.5, 0.5);
    let m = C64::new(0.5, -0.5);
    let mut u = CMatrix::identity(4, 4);
    u[(1, 1)] = p;
    u[(2, 2)] = p;
    u[(1, 2)] = m;
    u[(2, 1)] = m;
    GateTarget::new(
        "sqrt-swap",
        UnitaryMatrix::from_trusted(u),
        vec![UnitaryMatrix::from_trusted(swap_matrix())],
    )
    .expect("library gate")
}

pub fn pauli_x() -> GateTarget {
    GateTarget::new("x", UnitaryMatrix::from_trusted(permutation_matrix(&[1, 0])), vec![]).expect("library gate")
}

pub fn identity(num_qubits: usize) -> GateTarget {
    GateTarget::new("identity", UnitaryMatrix::identity(1 << num_qubits), vec![]).expect("library gate")
}

/// Library gate by name.
pub fn by_name(name: &str) -> Result<GateTarget> {
    match name {
        "toffoli" | "ccnot" => Ok(toffoli()),
        "fredkin" | "cswap" => Ok(fredkin()),
        "sqrt-swap" | "sqrt_swap" | "sqswap" => Ok(sqrt_swap()),
        "x" | "not" => Ok(pauli_x()),
        _ => Err(Error::InvalidInput(format!("unknown gate `{name}`"))),
    }
}

/// Parses a JSON 2D array of `[re, im]` pairs (row-major) into a validated
/// gate.
pub fn custom_gate_from_json(name: &str, text: &str) -> Result<GateTarget> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
    let n = rows.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidInput(format!("gate dimension {n} is not a power of two")));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("row {bad} has {} entries, expected {n}", rows[bad].len())));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gate matrix".into()));
    }
    let m = CMatrix::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1]));
    let defect = unitarity_defect(&m);
    if !(defect < CUSTOM_GATE_TOL) {
        return Err(Error::NotUnitary(defect));
    }
    GateTarget::new(name, UnitaryMatrix::from_trusted(m), vec![])
}

pub fn custom_gate(path: &Path) -> Result<GateTarget> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".to_string());
    custom_gate_from_json(&name, &text)
}

/// Principal logarithm `K` with `exp(iK) = U`.
#[derive(Clone, Debug)]
pub struct GateLog {
    pub generator: HermitianOperator,
    pub traceless: HermitianOperator,
    pub eigenphases: Vec<f64>,
    pub branch: &'static str,
}

pub const BRANCH_NOTE: &str = "principal branch: eigenphases in (-pi, pi], eigenvalue -1 mapped to +pi";

/// Eigenphases within this distance of `-pi` are folded to `+pi`.
const BRANCH_CUT_TOL: f64 = 1e-9;

pub fn gate_log(target: &GateTarget) -> Result<GateLog> {
    unitary_log(target.unitary.matrix())
}

/// Principal logarithm of a unitary via its (diagonal) complex Schur form.
pub fn unitary_log(u: &CMatrix) -> Result<GateLog> {
    let defect = unitarity_defect(u);
    if defect > 1e-8 {
        return Err(Error::NotUnitary(defect));
    }
    let (q, t) = Schur::new(u.clone()).unpack();
    let n = u.nrows();
    let phases: Vec<f64> = (0..n)
        .map(|k| {
            let phi = t[(k, k)].arg();
            if phi <= -std::f64::consts::PI + BRANCH_CUT_TOL {
                std::f64::consts::PI
            } else {
                phi
            }
        })
        .collect();
    let mut scaled = q.clone();
    for (k, &phi) in phases.iter().enumerate() {
        scaled.column_mut(k).scale_mut(phi);
    }
    let k = scaled * q.adjoint();
    let k = (&k + k.adjoint()) * real(0.5);
    let generator = HermitianOperator::from_dense(&k)?.pruned(1e-13);
    let traceless = generator.traceless_part();
    Ok(GateLog {
        generator,
        traceless,
        eigenphases: phases,
        branch: BRANCH_NOTE,
    })
}

/// Report-friendly view of a gate log.
#[derive(Clone, Debug, Serialize)]
pub struct GateLogSummary {
    pub branch: String,
    pub num_terms: usize,
    pub eigenphases: Vec<f64>,
}

impl From<&GateLog> for GateLogSummary {
    fn from(g: &GateLog) -> Self {
        GateLogSummary {
            branch: g.branch.to_string(),
            num_terms: g.generator.num_terms(),
            eigenphases: g.eigenphases.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::eig_hermitian;
    use crate::operators::{pauli_matrix, PauliString};
    use std::f64::consts::PI;

    fn exp_i(k: &HermitianOperator) -> CMatrix {
        // exp(iK) = propagator of -K
        eig_hermitian(&k.scaled(-1.0)).unwrap().propagator().into_matrix()
    }

    fn basis(dim: usize, k: usize) -> nalgebra::DVector<C64> {
        let mut v = nalgebra::DVector::zeros(dim);
        v[k] = real(1.0);
        v
    }

    #[test]
    fn toffoli_action() {
        let t = toffoli();
        let u = t.unitary.matrix();
        assert_eq!(u * basis(8, 0b110), basis(8, 0b111));
        assert_eq!(u * basis(8, 0b101), basis(8, 0b101));
        assert!(max_abs_diff(&(u * u), &CMatrix::identity(8, 8)) < 1e-15);
    }

    #[test]
    fn fredkin_action() {
        let f = fredkin();
        let u = f.unitary.matrix();
        assert_eq!(u * basis(8, 0b110), basis(8, 0b101));
        assert_eq!(u * basis(8, 0b011), basis(8, 0b011));
        assert!(max_abs_diff(&(u * u), &CMatrix::identity(8, 8)) < 1e-15);
    }

    #[test]
    fn sqrt_swap_squares_to_swap() {
        let s = sqrt_swap();
        let u = s.unitary.matrix();
        assert!(max_abs_diff(&(u * u), &swap_matrix()) < 1e-15);
        assert_eq!(u * basis(4, 0), basis(4, 0));
        assert_eq!(u[(1, 1)], C64::new(0.5, 0.5));
    }

    #[test]
    fn custom_gate_validation() {
        assert!(custom_gate_from_json("id", "[[[1,0],[0,0]],[[0,0],[1,0]]]").is_ok());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = format!("[[[{h},0],[{h},0]],[[{h},0],[{m},0]]]", m = -h);
        assert!(custom_gate_from_json("h", &had).is_ok());
        let scaled = format!("[[[{a},0],[{a},0]],[[{h},0],[{m},0]]]", a = 1.01 * h, m = -h);
        match custom_gate_from_json("bad", &scaled) {
            Err(Error::NotUnitary(d)) => assert!(d > 1e-3),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert!(custom_gate_from_json("bad", "[[[1,0],[0,0]]]").is_err());
        assert!(custom_gate_from_json("bad", "[[[1,0]]],").is_err());
    }

    #[test]
    fn log_of_identity_is_zero() {
        let g = gate_log(&identity(2)).unwrap();
        assert!(g.generator.norm() < 1e-12);
    }

    #[test]
    fn log_of_x() {
        let g = gate_log(&pauli_x()).unwrap();
        let x = HermitianOperator::from_pauli("X".parse::<PauliString>().unwrap(), 1.0);
        let expect = &HermitianOperator::identity(1).scaled(PI / 2.0) - &x.scaled(PI / 2.0);
        assert!(max_abs_diff(g.generator.dense(), expect.dense()) < 1e-12);
        assert!(max_abs_diff(&exp_i(&g.generator), &pauli_matrix(&"X".parse().unwrap())) < 1e-12);
    }

    #[test]
    fn log_of_ccnot_is_projector() {
        // pi * |11><11| (x) |-><-|, built independently from its definition.
        let minus = nalgebra::DVector::from_vec(vec![real(0.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.0), real(0.5f64.sqrt()), real(-(0.5f64.sqrt()))]);
        let proj = &minus * minus.adjoint() * real(PI);
        let g = gate_log(&toffoli()).unwrap();
        assert!(max_abs_diff(g.generator.dense(), &proj) < 1e-12);
        assert!(max_abs_diff(&exp_i(&g.generator), toffoli().unitary.matrix()) < 1e-9);
        assert!(g.eigenphases.iter().all(|p| *p > -PI && *p <= PI));
    }

    #[test]
    fn library_symmetries_commute() {
        for g in [toffoli(), fredkin(), sqrt_swap()] {
            assert!(unitarity_defect(g.unitary.matrix()) < 1e-10);
            for s in &g.symmetries {
                let u = g.unitary.matrix();
                assert!(max_abs_diff(&(u * s.matrix()), &(s.matrix() * u)) < 1e-10);
            }
        }
    }

    #[test]
    fn logs_reconstruct_library_gates() {
        for g in [toffoli(), fredkin(), sqrt_swap(), pauli_x()] {
            let l = gate_log(&g).unwrap();
            assert!(max_abs_diff(&exp_i(&l.generator), g.unitary.matrix()) < 1e-9, "{}", g.name);
        }
    }

    #[test]
    fn rejects_asymmetric_declaration() {
        let s = UnitaryMatrix::new(pauli_matrix(&"ZI".parse().unwrap())).unwrap();
        let u = UnitaryMatrix::new(pauli_matrix(&"XI".parse().unwrap())).unwrap();
        assert!(GateTarget::new("x", u, vec![s]).is_err());
    }
}
