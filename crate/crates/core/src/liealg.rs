//! Dynamical Lie algebra closure and the necessary-condition feasibility test.
//!
//! For `H = sum_j lambda_j O_j`, a gate `G` can only be reached by the
//! evolution if `log G` lies in the real Lie algebra generated by the `O_j`
//! under repeated commutators. Constant `lambda_j` is a special case of a
//! time-dependent control, so failure rules a network out while success
//! proves nothing. Everything here works on Pauli coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{gate_log, GateTarget, BRANCH_NOTE};
use crate::network::{CouplingEntry, FieldEntry, NetworkFile, NetworkSpec};
use crate::operators::{comm_h, embed, hs_inner, HermitianOperator};

/// Gram-Schmidt residuals below this are treated as dependent.
pub const INDEPENDENCE_TOL: f64 = 1e-10;
/// Relative residual below which an operator counts as a member.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Which operation produced a basis element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Generator(usize),
    Commutator(usize, usize),
}

/// Orthonormal (under the normalized Hilbert-Schmidt product) basis of a
/// Lie algebra.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    num_qubits: usize,
    elements: Vec<HermitianOperator>,
    provenance: Vec<Provenance>,
}

impl AlgebraBasis {
    fn empty(num_qubits: usize) -> AlgebraBasis {
        AlgebraBasis {
            num_qubits,
            elements: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Orthogonalize `op` against the basis; append it when the remainder is
    /// independent.
    fn try_add(&mut self, op: &HermitianOperator, prov: Provenance) -> bool {
        let mut v = op.clone();
        // two passes keep the basis orthonormal to rounding
        for _ in 0..2 {
            for b in &self.elements {
                let c = hs_inner(b, &v).expect("same qubit count");
                if c != 0.0 {
                    v = &v - &b.scaled(c);
                }
            }
        }
        let norm = v.norm();
        if norm < INDEPENDENCE_TOL {
            return false;
        }
        self.elements.push(v.scaled(1.0 / norm).pruned(1e-15));
        self.provenance.push(prov);
        true
    }
}

/// Real Lie algebra generated by `generators` under `i[., .]`.
pub fn closure(generators: &[HermitianOperator]) -> Result<AlgebraBasis> {
    let first = generators
        .first()
        .ok_or_else(|| Error::InvalidInput("closure needs at least one generator".into()))?;
    let n = first.num_qubits();
    if let Some(g) = generators.iter().find(|g| g.num_qubits() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: g.num_qubits() });
    }
    let mut basis = AlgebraBasis::empty(n);
    for (k, g) in generators.iter().enumerate() {
        basis.try_add(g, Provenance::Generator(k));
    }
    let max_dim = 1usize << (2 * n);
    let mut frontier: Vec<usize> = (0..basis.dim()).collect();
    while !frontier.is_empty() && basis.dim() < max_dim {
        let mut added = Vec::new();
        for &i in &frontier {
            let mut j = 0;
            while j < basis.dim() {
                if i != j {
                    let c = comm_h(&basis.elements[i], &basis.elements[j])?;
                    if !c.is_zero() && basis.try_add(&c, Provenance::Commutator(i, j)) {
                        added.push(basis.dim() - 1);
                    }
                }
                j += 1;
            }
        }
        frontier = added;
    }
    Ok(basis)
}

/// Relative residual of the traceless part of `k` after projecting onto the
/// span of the traceless parts of the basis. Zero for multiples of identity.
pub fn membership_residual(basis: &AlgebraBasis, k: &HermitianOperator) -> Result<f64> {
    if k.num_qubits() != basis.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: basis.num_qubits,
            found: k.num_qubits(),
        });
    }
    let target = k.traceless_part();
    let scale = target.norm();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut traceless = AlgebraBasis::empty(basis.num_qubits);
    for (idx, e) in basis.elements.iter().enumerate() {
        traceless.try_add(&e.traceless_part(), Provenance::Generator(idx));
    }
    let mut r = target;
    for _ in 0..2 {
        for b in &traceless.elements {
            let c = hs_inner(b, &r)?;
            r = &r - &b.scaled(c);
        }
    }
    Ok(r.norm() / scale)
}

/// Global phase is ignored: identity components are dropped on both sides.
pub fn contains(basis: &AlgebraBasis, k: &HermitianOperator) -> Result<bool> {
    Ok(membership_residual(basis, k)? < MEMBERSHIP_TOL)
}

/// Outcome of the necessary-condition test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieReport {
    pub passes: bool,
    pub algebra_dim: usize,
    pub num_generators: usize,
    pub residual: f64,
    pub branch: String,
    pub caveat: String,
}

pub const CAVEAT: &str = "tests log(U_Q) (x) 1_A only; a failure does not exclude \
implementations whose register action depends on the ancilla state";

/// Tie-group operators of a spec, skipping empty groups.
pub fn spec_generators(spec: &NetworkSpec) -> Result<Vec<HermitianOperator>> {
    Ok((0..spec.num_groups())
        .map(|g| spec.term_derivative(g))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|g| !g.is_zero())
        .collect())
}

/// `log(U_Q) (x) 1_A` in the spec's global ordering.
pub fn embedded_target_log(spec: &NetworkSpec, target: &GateTarget) -> Result<HermitianOperator> {
    if target.dim() != spec.register_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.register_dim(),
            found: target.dim(),
        });
    }
    let log = gate_log(target)?;
    let positions: Vec<usize> = (0..spec.register().len()).collect();
    embed(&log.generator, &positions, spec.num_qubits())
}

pub fn necessary_condition(spec: &NetworkSpec, target: &GateTarget) -> Result<LieReport> {
    let gens = spec_generators(spec)?;
    let k = embedded_target_log(spec, target)?;
    let (dim, residual) = if gens.is_empty() {
        let r = if k.traceless_part().is_zero() { 0.0 } else { 1.0 };
        (0, r)
    } else {
        let basis = closure(&gens)?;
        (basis.dim(), membership_residual(&basis, &k)?)
    };
    Ok(LieReport {
        passes: residual < MEMBERSHIP_TOL,
        algebra_dim: dim,
        num_generators: gens.len(),
        residual,
        branch: BRANCH_NOTE.to_string(),
        caveat: CAVEAT.to_string(),
    })
}

/// A group of terms that `bottom_up` may add to a network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateGroup {
    pub name: String,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default)]
    pub fields: Vec<FieldEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottomUpStep {
    /// `None` for the base network.
    pub added: Option<String>,
    pub algebra_dim: usize,
    pub residual: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottomUpReport {
    pub network: NetworkFile,
    pub passes: bool,
    pub steps: Vec<BottomUpStep>,
}

/// Greedily append candidate groups, in order, until the necessary condition
/// holds or the candidates run out. Candidate entries are assigned to a group
/// named after the candidate.
pub fn bottom_up(base: &NetworkFile, candidates: &[CandidateGroup], target: &GateTarget) -> Result<BottomUpReport> {
    let mut network = base.clone();
    let mut steps = Vec::new();
    let report = necessary_condition(&NetworkSpec::from_file(&network)?, target)?;
    steps.push(BottomUpStep {
        added: None,
        algebra_dim: report.algebra_dim,
        residual: report.residual,
        passes: report.passes,
    });
    let mut passes = report.passes;
    for cand in candidates {
        if passes {
            break;
        }
        network.couplings.extend(cand.couplings.iter().cloned().map(|mut c| {
            c.group = cand.name.clone();
            c
        }));
        network.fields.extend(cand.fields.iter().cloned().map(|mut f| {
            f.group = cand.name.clone();
            f
        }));
        let report = necessary_condition(&NetworkSpec::from_file(&network)?, target)?;
        steps.push(BottomUpStep {
            added: Some(cand.name.clone()),
            algebra_dim: report.algebra_dim,
            residual: report.residual,
            passes: report.passes,
        });
        passes = report.passes;
    }
    Ok(BottomUpReport { network, passes, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::operators::PauliString;

    fn op(s: &str) -> HermitianOperator {
        HermitianOperator::from_pauli(s.parse::<PauliString>().unwrap(), 1.0)
    }

    #[test]
    fn abelian_and_su2() {
        assert_eq!(closure(&[op("X")]).unwrap().dim(), 1);
        let b = closure(&[op("X"), op("Z")]).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(contains(&b, &op("Y")).unwrap());
        assert!(!contains(&closure(&[op("X")]).unwrap(), &op("Z")).unwrap());
        assert!(closure(&[]).is_err());
        assert!(closure(&[op("X"), op("XX")]).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        let b = closure(&[op("XI"), op("ZZ"), op("IY")]).unwrap();
        for (i, a) in b.elements().iter().enumerate() {
            for (j, c) in b.elements().iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((hs_inner(a, c).unwrap() - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identity_component_is_ignored() {
        let b = closure(&[op("X")]).unwrap();
        let shifted = &op("X") + &op("I").scaled(3.0);
        assert!(contains(&b, &shifted).unwrap());
        assert!(contains(&b, &op("I")).unwrap());
    }

    #[test]
    fn single_field_reaches_x() {
        let spec = NetworkSpec::from_json(r#"{"num_qubits":1,"register":[0],"fields":[{"site":0,"axis":"x","group":"h"}]}"#).unwrap();
        assert!(necessary_condition(&spec, &gates::pauli_x()).unwrap().passes);
    }

    #[test]
    fn bottom_up_exhaustion_and_noop() {
        let base: NetworkFile =
            serde_json::from_str(r#"{"num_qubits":1,"register":[0],"fields":[{"site":0,"axis":"z","group":"hz"}]}"#).unwrap();
        let r = bottom_up(&base, &[], &gates::pauli_x()).unwrap();
        assert!(!r.passes);
        assert_eq!(r.steps.len(), 1);

        let ok: NetworkFile =
            serde_json::from_str(r#"{"num_qubits":1,"register":[0],"fields":[{"site":0,"axis":"x","group":"hx"}]}"#).unwrap();
        let cand = CandidateGroup {
            name: "hz".into(),
            couplings: vec![],
            fields: vec![FieldEntry { site: 0, axis: "z".into(), group: String::new(), mult: 1.0 }],
        };
        let r = bottom_up(&ok, &[cand.clone()], &gates::pauli_x()).unwrap();
        assert!(r.passes);
        assert_eq!(r.network, ok);

        let hy = CandidateGroup {
            name: "hy".into(),
            couplings: vec![],
            fields: vec![FieldEntry { site: 0, axis: "y".into(), group: String::new(), mult: 1.0 }],
        };
        let r = bottom_up(&base, &[hy], &gates::pauli_x()).unwrap();
        assert!(r.passes);
        let dims: Vec<usize> = r.steps.iter().map(|s| s.algebra_dim).collect();
        assert_eq!(dims, vec![1, 3]);
    }
}
