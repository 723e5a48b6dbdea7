//! State fidelity, average gate fidelity, and their parameter gradients.
//!
//! For an input `psi` the state fidelity is
//! `F_psi = <psi| U^dag E[|psi><psi|] U |psi>`; its Haar average has the closed
//! form
//!
//! ```text
//! F_bar = 1/(D+1) + 1/(D(D+1)) * sum_{ijkl} conj(U_ik) E^{ij,kl} U_jl
//! ```
//!
//! which is evaluated from the exact superoperator. Gradients use the Kraus
//! form of the same channel together with the divided-difference derivative
//! of the propagator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{eig_hermitian, kraus_operators, superoperator_from_propagator, EigenSystem, Superoperator};
use crate::error::{Error, Result};
use crate::gates::GateTarget;
use crate::network::{AncillaState, NetworkSpec, ParameterVector};
use crate::operators::{CMatrix, CVector, C64, ZERO};

/// Summary of a Haar-sampled fidelity study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub f_bar: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub num_samples: usize,
    pub seed: u64,
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        });
        let n = v.norm();
        if n > 0.0 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Haar-random state from a dedicated seed.
pub fn haar_state_from_seed(dim: usize, seed: u64) -> CVector {
    sample_haar_state(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn check_state(psi: &CVector, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: psi.len() });
    }
    let n = psi.norm();
    if !((n - 1.0).abs() <= 1e-10) {
        return Err(Error::InvalidState(format!("input state norm {n} is not 1")));
    }
    Ok(())
}

fn check_target(spec: &NetworkSpec, target: &GateTarget) -> Result<()> {
    if target.dim() != spec.register_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.register_dim(),
            found: target.dim(),
        });
    }
    Ok(())
}

/// Closed form for a unitary channel `V`: `(D + |Tr(U^dag V)|^2) / (D(D+1))`.
pub fn avg_fidelity_unitary(target: &CMatrix, v: &CMatrix) -> f64 {
    let d = target.nrows() as f64;
    let t = (target.adjoint() * v).trace();
    (d + t.norm_sqr()) / (d * (d + 1.0))
}

/// Average gate fidelity from a superoperator.
pub fn avg_fidelity_from_superoperator(e: &Superoperator, target: &CMatrix) -> f64 {
    let d = e.dim();
    let mut sum = ZERO;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let uik = target[(i, k)].conj();
                for l in 0..d {
                    sum += uik * e.get(i, j, k, l) * target[(j, l)];
                }
            }
        }
    }
    let df = d as f64;
    1.0 / (df + 1.0) + sum.re / (df * (df + 1.0))
}

/// Everything needed to evaluate fidelities and gradients at one parameter
/// point. The propagator is diagonalized once.
pub struct ChannelPoint<'a> {
    spec: &'a NetworkSpec,
    target: &'a GateTarget,
    eig: EigenSystem,
    u: CMatrix,
    psi_a: CVector,
    d_psi_a: Vec<CVector>,
}

impl<'a> ChannelPoint<'a> {
    /// Ancilla state taken from the spec (fixed or from trainable parameters).
    pub fn new(spec: &'a NetworkSpec, target: &'a GateTarget, lambda: &ParameterVector) -> Result<ChannelPoint<'a>> {
        let (psi_a, d_psi_a) = spec.ancilla_jacobian(lambda)?;
        ChannelPoint::build(spec, target, lambda, psi_a, d_psi_a)
    }

    /// Explicit ancilla state; gradients cover only the tie groups.
    pub fn with_ancilla(
        spec: &'a NetworkSpec,
        target: &'a GateTarget,
        lambda: &ParameterVector,
        ancilla: &AncillaState,
    ) -> Result<ChannelPoint<'a>> {
        if ancilla.dim() != spec.ancilla_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.ancilla_dim(),
                found: ancilla.dim(),
            });
        }
        ChannelPoint::build(spec, target, lambda, ancilla.amplitudes().clone(), Vec::new())
    }

    fn build(
        spec: &'a NetworkSpec,
        target: &'a GateTarget,
        lambda: &ParameterVector,
        psi_a: CVector,
        d_psi_a: Vec<CVector>,
    ) -> Result<ChannelPoint<'a>> {
        check_target(spec, target)?;
        let h = spec.assemble_hamiltonian(lambda)?;
        let eig = eig_hermitian(&h)?;
        let u = eig.propagator().into_matrix();
        Ok(ChannelPoint { spec, target, eig, u, psi_a, d_psi_a })
    }

    pub fn propagator(&self) -> &CMatrix {
        &self.u
    }

    pub fn superoperator(&self) -> Superoperator {
        superoperator_from_propagator(&self.u, &self.psi_a, self.spec.register_dim())
    }

    /// `F_psi`, computed as `sum_a |<U_Q psi (x) a| U |psi (x) psi_A>|^2`.
    pub fn state_fidelity(&self, psi: &CVector) -> Result<f64> {
        check_state(psi, self.spec.register_dim())?;
        let (amps, _) = self.output_amplitudes(psi);
        Ok(amps.iter().map(|c| c.norm_sqr()).sum())
    }

    /// `c_a = <phi (x) a| U |psi (x) psi_A>` and `phi = U_Q psi`.
    fn output_amplitudes(&self, psi: &CVector) -> (Vec<C64>, CVector) {
        let phi = self.target.unitary.matrix() * psi;
        let input = psi.kronecker(&self.psi_a);
        let out = &self.u * input;
        (project_register(&phi, &out, self.psi_a.len()), phi)
    }

    /// Exact Haar average from the superoperator.
    pub fn avg_fidelity(&self) -> f64 {
        avg_fidelity_from_superoperator(&self.superoperator(), self.target.unitary.matrix())
    }

    /// Same quantity through the Kraus form `(D + sum_a |Tr(U_Q^dag K_a)|^2) / (D(D+1))`.
    pub fn avg_fidelity_kraus(&self) -> f64 {
        let d = self.spec.register_dim() as f64;
        let s: f64 = self
            .kraus_traces(&self.u, &self.psi_a)
            .iter()
            .map(|t| t.norm_sqr())
            .sum();
        (d + s) / (d * (d + 1.0))
    }

    fn kraus_traces(&self, u: &CMatrix, psi_a: &CVector) -> Vec<C64> {
        let uq = self.target.unitary.matrix();
        kraus_operators(u, psi_a, self.spec.register_dim())
            .iter()
            .map(|k| (uq.adjoint() * k).trace())
            .collect()
    }

    fn group_derivatives(&self) -> Result<Vec<CMatrix>> {
        (0..self.spec.num_groups())
            .map(|g| {
                let d = self.spec.term_derivative(g)?;
                self.eig.propagator_derivative(d.dense())
            })
            .collect()
    }

    /// Gradient of `F_psi` over the tie groups followed by ancilla parameters.
    pub fn grad_state_fidelity(&self, psi: &CVector) -> Result<Vec<f64>> {
        check_state(psi, self.spec.register_dim())?;
        let (amps, phi) = self.output_amplitudes(psi);
        let dim_a = self.psi_a.len();
        let input = psi.kronecker(&self.psi_a);
        let mut grad = Vec::with_capacity(self.spec.num_groups() + self.d_psi_a.len());
        let contract = |d_amps: Vec<C64>| -> f64 {
            amps.iter().zip(d_amps).map(|(c, dc)| 2.0 * (c.conj() * dc).re).sum()
        };
        for du in self.group_derivatives()? {
            let d_out = du * &input;
            grad.push(contract(project_register(&phi, &d_out, dim_a)));
        }
        for dpsi in &self.d_psi_a {
            let d_out = &self.u * psi.kronecker(dpsi);
            grad.push(contract(project_register(&phi, &d_out, dim_a)));
        }
        Ok(grad)
    }

    /// Gradient of the average gate fidelity.
    pub fn grad_avg_fidelity(&self) -> Result<Vec<f64>> {
        let d = self.spec.register_dim() as f64;
        let norm = d * (d + 1.0);
        let traces = self.kraus_traces(&self.u, &self.psi_a);
        let contract = |d_traces: Vec<C64>| -> f64 {
            traces
                .iter()
                .zip(d_traces)
                .map(|(t, dt)| 2.0 * (t.conj() * dt).re)
                .sum::<f64>()
                / norm
        };
        let mut grad = Vec::with_capacity(self.spec.num_groups() + self.d_psi_a.len());
        for du in self.group_derivatives()? {
            grad.push(contract(self.kraus_traces(&du, &self.psi_a)));
        }
        for dpsi in &self.d_psi_a {
            grad.push(contract(self.kraus_traces(&self.u, dpsi)));
        }
        Ok(grad)
    }
}

/// `<phi (x) a| out>` for every ancilla basis state `a`.
fn project_register(phi: &CVector, out: &CVector, dim_a: usize) -> Vec<C64> {
    (0..dim_a)
        .map(|a| {
            phi.iter()
                .enumerate()
                .fold(ZERO, |acc, (i, p)| acc + p.conj() * out[i * dim_a + a])
        })
        .collect()
}

pub fn state_fidelity(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    ancilla: &AncillaState,
    psi: &CVector,
    target: &GateTarget,
) -> Result<f64> {
    ChannelPoint::with_ancilla(spec, target, lambda, ancilla)?.state_fidelity(psi)
}

pub fn avg_fidelity(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    ancilla: &AncillaState,
    target: &GateTarget,
) -> Result<f64> {
    Ok(ChannelPoint::with_ancilla(spec, target, lambda, ancilla)?.avg_fidelity())
}

/// Gradient over all free parameters; the ancilla comes from `spec`/`lambda`.
pub fn grad_state_fidelity(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    psi: &CVector,
    target: &GateTarget,
) -> Result<Vec<f64>> {
    ChannelPoint::new(spec, target, lambda)?.grad_state_fidelity(psi)
}

pub fn grad_avg_fidelity(spec: &NetworkSpec, lambda: &ParameterVector, target: &GateTarget) -> Result<Vec<f64>> {
    ChannelPoint::new(spec, target, lambda)?.grad_avg_fidelity()
}

/// Sample mean and (unbiased) variance of `F_psi` over Haar states.
pub fn fidelity_variance(
    spec: &NetworkSpec,
    lambda: &ParameterVector,
    ancilla: &AncillaState,
    target: &GateTarget,
    num_samples: usize,
    seed: u64,
) -> Result<FidelityReport> {
    if num_samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let point = ChannelPoint::with_ancilla(spec, target, lambda, ancilla)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.register_dim();
    let samples = (0..num_samples)
        .map(|_| point.state_fidelity(&sample_haar_state(dim, &mut rng)))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, var) = mean_variance(&samples);
    Ok(FidelityReport {
        f_bar: point.avg_fidelity(),
        sample_mean: mean,
        sample_variance: var,
        num_samples,
        seed,
    })
}

/// Mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;

    fn single_field() -> NetworkSpec {
        NetworkSpec::from_json(r#"{"num_qubits":1,"register":[0],"fields":[{"site":0,"axis":"x","group":"h"}]}"#).unwrap()
    }

    fn ket0() -> CVector {
        CVector::from_vec(vec![C64::new(1.0, 0.0), ZERO])
    }

    #[test]
    fn exact_channel_has_unit_fidelity() {
        let spec = single_field();
        let lambda = spec.params(vec![0.0]);
        let anc = AncillaState::trivial();
        let id = gates::identity(1);
        let psi = haar_state_from_seed(2, 3);
        assert!((state_fidelity(&spec, &lambda, &anc, &psi, &id).unwrap() - 1.0).abs() < 1e-14);
        assert!((avg_fidelity(&spec, &lambda, &anc, &id).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_channel_against_x() {
        let spec = single_field();
        let lambda = spec.params(vec![0.0]);
        let anc = AncillaState::trivial();
        let x = gates::pauli_x();
        assert!(state_fidelity(&spec, &lambda, &anc, &ket0(), &x).unwrap().abs() < 1e-15);
        assert!((avg_fidelity(&spec, &lambda, &anc, &x).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn toy_closed_form() {
        // F_psi(h) = sin^2(h/2) for psi = |0>, dF/dh = sin(h/2)cos(h/2)
        let spec = single_field();
        let x = gates::pauli_x();
        for h in [0.3, 1.1, 2.9, -0.7, 4.0] {
            let lambda = spec.params(vec![h]);
            let f = state_fidelity(&spec, &lambda, &AncillaState::trivial(), &ket0(), &x).unwrap();
            assert!((f - (h / 2.0).sin().powi(2)).abs() < 1e-14);
            let g = grad_state_fidelity(&spec, &lambda, &ket0(), &x).unwrap();
            assert!((g[0] - (h / 2.0).sin() * (h / 2.0).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = single_field();
        let lambda = spec.params(vec![0.1]);
        let anc = AncillaState::trivial();
        let x = gates::pauli_x();
        let unnormalized = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(
            state_fidelity(&spec, &lambda, &anc, &unnormalized, &x),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            avg_fidelity(&spec, &lambda, &anc, &gates::toffoli()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(fidelity_variance(&spec, &lambda, &anc, &x, 1, 0).is_err());
    }

    #[test]
    fn haar_state_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [1, 2, 8, 16] {
            let v = sample_haar_state(dim, &mut rng);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variance_is_seed_reproducible() {
        let spec = single_field();
        let lambda = spec.params(vec![2.0]);
        let anc = AncillaState::trivial();
        let x = gates::pauli_x();
        let a = fidelity_variance(&spec, &lambda, &anc, &x, 50, 9).unwrap();
        let b = fidelity_variance(&spec, &lambda, &anc, &x, 50, 9).unwrap();
        assert_eq!(a, b);
        let exact = fidelity_variance(&spec, &spec.params(vec![std::f64::consts::PI]), &anc, &x, 50, 9).unwrap();
        assert!(exact.sample_variance < 1e-20);
    }
}
