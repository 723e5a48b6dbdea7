//! Qubit network declaration and Hamiltonian assembly.
//!
//! The Hamiltonian is the 2-local form
//!
//! ```text
//! H = sum_{(n,m)} sum_{ab} J^{ab}_{nm} s^a_n s^b_m / 4 + sum_n sum_a h^a_n s^a_n / 2
//! ```
//!
//! where every coefficient is `multiplier * lambda[group]` for the tie group the
//! term belongs to. Register sites come first in the global basis ordering,
//! followed by ancillae, each in the order they are listed.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    embed_matrix, max_abs_diff, CVector, HermitianOperator, Pauli, PauliString, UnitaryMatrix, C64,
};

pub const COUPLING_FACTOR: f64 = 0.25;
pub const FIELD_FACTOR: f64 = 0.5;

fn default_mult() -> f64 {
    1.0
}

/// One entry of `couplings` in a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub sites: [usize; 2],
    /// Two axis letters, e.g. `"zz"` or `"xy"`.
    pub axes: String,
    pub group: String,
    #[serde(default = "default_mult")]
    pub mult: f64,
}

/// One entry of `fields` in a network file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldEntry {
    pub site: usize,
    pub axis: String,
    pub group: String,
    #[serde(default = "default_mult")]
    pub mult: f64,
}

/// `ancilla_state` section of a network file.
///
/// Either fixed (`trainable: false` with `eta`/`xi` or `amplitudes`) or
/// trainable. A trainable single ancilla uses the angle form
/// `cos(eta)|0> + e^{i xi} sin(eta)|1>`; a trainable multi-ancilla state is a
/// normalized complex vector with the first amplitude kept real.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AncillaConfig {
    #[serde(default)]
    pub trainable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

/// Serialized form of a network (the JSON network file).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub num_qubits: usize,
    pub register: Vec<usize>,
    #[serde(default)]
    pub ancillae: Vec<usize>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default)]
    pub fields: Vec<FieldEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla_state: Option<AncillaConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TermKind {
    Coupling { sites: (usize, usize), axes: (Pauli, Pauli) },
    Field { site: usize, axis: Pauli },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub group: usize,
    pub mult: f64,
}

/// Normalized ancilla pure state. The global phase is fixed so that the first
/// nonzero amplitude is real and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct AncillaState {
    amplitudes: CVector,
}

impl AncillaState {
    pub fn new(amplitudes: CVector) -> Result<AncillaState> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState(format!("ancilla dimension {dim} is not a power of two")));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("ancilla amplitudes".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("ancilla norm {norm} != 1")));
        }
        Ok(AncillaState { amplitudes: gauge_fixed(amplitudes) })
    }

    /// Normalizes before validating.
    pub fn normalized(amplitudes: CVector) -> Result<AncillaState> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("ancilla vector has zero or non-finite norm".into()));
        }
        AncillaState::new(amplitudes / C64::new(norm, 0.0))
    }

    /// `cos(eta)|0> + e^{i xi} sin(eta)|1>`.
    pub fn from_angles(eta: f64, xi: f64) -> Result<AncillaState> {
        if !eta.is_finite() || !xi.is_finite() {
            return Err(Error::NonFinite("ancilla angles".into()));
        }
        AncillaState::new(angle_vector(eta, xi))
    }

    /// The empty ancilla register (dimension 1).
    pub fn trivial() -> AncillaState {
        AncillaState { amplitudes: CVector::from_element(1, C64::new(1.0, 0.0)) }
    }

    pub fn basis(dim: usize, index: usize) -> AncillaState {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        AncillaState { amplitudes: v }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

fn gauge_fixed(v: CVector) -> CVector {
    match v.iter().find(|a| a.norm() > 1e-15) {
        Some(first) => {
            let phase = first.conj() / first.norm();
            v * phase
        }
        None => v,
    }
}

fn angle_vector(eta: f64, xi: f64) -> CVector {
    CVector::from_vec(vec![
        C64::new(eta.cos(), 0.0),
        Complex64::from_polar(eta.sin(), xi),
    ])
}

/// How the ancilla state enters the model.
#[derive(Clone, Debug, PartialEq)]
pub enum AncillaMode {
    Fixed(AncillaState),
    /// Single ancilla, two trailing parameters `(eta, xi)`.
    Angles,
    /// `2 * 2^|A| - 1` trailing parameters: real first amplitude then re/im pairs.
    UnitVector,
}

/// The free parameters: one value per tie group, then ancilla parameters
/// when the ancilla state is trainable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ancilla: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> ParameterVector {
        ParameterVector { values, ancilla: Vec::new() }
    }

    pub fn with_ancilla(values: Vec<f64>, ancilla: Vec<f64>) -> ParameterVector {
        ParameterVector { values, ancilla }
    }

    /// All parameters in optimizer order (groups, then ancilla).
    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().chain(&self.ancilla).copied().collect()
    }

    pub fn len(&self) -> usize {
        self.values.len() + self.ancilla.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A validated qubit network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    num_qubits: usize,
    register: Vec<usize>,
    ancillae: Vec<usize>,
    /// site label -> global position (register first, then ancillae)
    position: Vec<usize>,
    terms: Vec<Term>,
    groups: Vec<String>,
    ancilla: AncillaMode,
    ancilla_defaults: Vec<f64>,
}

fn parse_axis(c: char) -> Result<Pauli> {
    match Pauli::from_char(c) {
        Some(Pauli::I) | None => Err(Error::InvalidSpec(format!("invalid axis `{c}`"))),
        Some(p) => Ok(p),
    }
}

fn axis_char(p: Pauli) -> char {
    p.as_char().to_ascii_lowercase()
}

impl NetworkSpec {
    pub fn from_file(file: &NetworkFile) -> Result<NetworkSpec> {
        let n = file.num_qubits;
        if n == 0 || n > crate::operators::MAX_DENSE_QUBITS {
            return Err(Error::InvalidSpec(format!("num_qubits {n} outside 1..=12")));
        }
        if file.register.is_empty() {
            return Err(Error::InvalidSpec("register is empty".into()));
        }
        let mut position = vec![usize::MAX; n];
        for (pos, &s) in file.register.iter().chain(&file.ancillae).enumerate() {
            if s >= n {
                return Err(Error::InvalidSpec(format!("site {s} outside 0..{n}")));
            }
            if position[s] != usize::MAX {
                return Err(Error::InvalidSpec(format!("site {s} listed twice in register/ancillae")));
            }
            position[s] = pos;
        }
        if let Some(s) = position.iter().position(|&p| p == usize::MAX) {
            return Err(Error::InvalidSpec(format!("site {s} is neither register nor ancilla")));
        }

        let mut groups: Vec<String> = Vec::new();
        let mut group_index: HashMap<String, usize> = HashMap::new();
        let mut group_of = |name: &str| -> usize {
            if let Some(&g) = group_index.get(name) {
                return g;
            }
            groups.push(name.to_string());
            group_index.insert(name.to_string(), groups.len() - 1);
            groups.len() - 1
        };

        let mut terms = Vec::new();
        let mut seen_couplings = BTreeSet::new();
        let mut seen_fields = BTreeSet::new();
        for c in &file.couplings {
            let [a, b] = c.sites;
            if a >= n || b >= n {
                return Err(Error::InvalidSpec(format!("coupling sites {a},{b} outside 0..{n}")));
            }
            if a == b {
                return Err(Error::InvalidSpec(format!("coupling on a single site {a}")));
            }
            let ax: Vec<char> = c.axes.chars().collect();
            if ax.len() != 2 {
                return Err(Error::InvalidSpec(format!("coupling axes `{}` must have two letters", c.axes)));
            }
            let (pa, pb) = (parse_axis(ax[0])?, parse_axis(ax[1])?);
            let key = (a, b, pa, pb);
            let mirror = (b, a, pb, pa);
            if seen_couplings.contains(&key) || seen_couplings.contains(&mirror) {
                return Err(Error::InvalidSpec(format!("duplicate coupling {a}-{b} `{}`", c.axes)));
            }
            seen_couplings.insert(key);
            if !c.mult.is_finite() {
                return Err(Error::NonFinite(format!("multiplier of coupling {a}-{b}")));
            }
            terms.push(Term {
                kind: TermKind::Coupling { sites: (a, b), axes: (pa, pb) },
                group: group_of(&c.group),
                mult: c.mult,
            });
        }
        for f in &file.fields {
            if f.site >= n {
                return Err(Error::InvalidSpec(format!("field site {} outside 0..{n}", f.site)));
            }
            let ax: Vec<char> = f.axis.chars().collect();
            if ax.len() != 1 {
                return Err(Error::InvalidSpec(format!("field axis `{}` must be one letter", f.axis)));
            }
            let p = parse_axis(ax[0])?;
            if !seen_fields.insert((f.site, p)) {
                return Err(Error::InvalidSpec(format!("duplicate field on site {} `{}`", f.site, f.axis)));
            }
            if !f.mult.is_finite() {
                return Err(Error::NonFinite(format!("multiplier of field on site {}", f.site)));
            }
            terms.push(Term {
                kind: TermKind::Field { site: f.site, axis: p },
                group: group_of(&f.group),
                mult: f.mult,
            });
        }

        let num_anc = file.ancillae.len();
        let dim_a = 1usize << num_anc;
        let cfg = file.ancilla_state.clone().unwrap_or_default();
        let (ancilla, ancilla_defaults) = if cfg.trainable {
            if num_anc == 0 {
                return Err(Error::InvalidSpec("trainable ancilla state without ancillae".into()));
            }
            if num_anc == 1 {
                if cfg.amplitudes.is_some() {
                    return Err(Error::InvalidSpec("single trainable ancilla uses eta/xi".into()));
                }
                (AncillaMode::Angles, vec![cfg.eta.unwrap_or(0.0), cfg.xi.unwrap_or(0.0)])
            } else {
                if cfg.eta.is_some() || cfg.xi.is_some() {
                    return Err(Error::InvalidSpec("eta/xi only apply to a single ancilla".into()));
                }
                let defaults = match &cfg.amplitudes {
                    Some(a) => {
                        let v = amplitudes_vector(a, dim_a)?;
                        unit_vector_params(&AncillaState::normalized(v)?)
                    }
                    None => unit_vector_params(&AncillaState::basis(dim_a, 0)),
                };
                (AncillaMode::UnitVector, defaults)
            }
        } else {
            let state = match (&cfg.amplitudes, cfg.eta, cfg.xi) {
                (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                    return Err(Error::InvalidSpec("give either amplitudes or eta/xi".into()))
                }
                (Some(a), None, None) => AncillaState::normalized(amplitudes_vector(a, dim_a)?)?,
                (None, None, None) => AncillaState::basis(dim_a, 0),
                (None, eta, xi) => {
                    if num_anc != 1 {
                        return Err(Error::InvalidSpec("eta/xi only apply to a single ancilla".into()));
                    }
                    AncillaState::from_angles(eta.unwrap_or(0.0), xi.unwrap_or(0.0))?
                }
            };
            (AncillaMode::Fixed(state), Vec::new())
        };

        Ok(NetworkSpec {
            num_qubits: n,
            register: file.register.clone(),
            ancillae: file.ancillae.clone(),
            position,
            terms,
            groups,
            ancilla,
            ancilla_defaults,
        })
    }

    pub fn from_json(text: &str) -> Result<NetworkSpec> {
        let file: NetworkFile = serde_json::from_str(text)?;
        NetworkSpec::from_file(&file)
    }

    /// Serialized form; `from_file(to_file())` reproduces the spec.
    pub fn to_file(&self) -> NetworkFile {
        let mut couplings = Vec::new();
        let mut fields = Vec::new();
        for t in &self.terms {
            match t.kind {
                TermKind::Coupling { sites, axes } => couplings.push(CouplingEntry {
                    sites: [sites.0, sites.1],
                    axes: [axis_char(axes.0), axis_char(axes.1)].iter().collect(),
                    group: self.groups[t.group].clone(),
                    mult: t.mult,
                }),
                TermKind::Field { site, axis } => fields.push(FieldEntry {
                    site,
                    axis: axis_char(axis).to_string(),
                    group: self.groups[t.group].clone(),
                    mult: t.mult,
                }),
            }
        }
        let ancilla_state = match &self.ancilla {
            AncillaMode::Fixed(s) if self.ancillae.is_empty() => {
                debug_assert_eq!(s.dim(), 1);
                None
            }
            AncillaMode::Fixed(s) => Some(AncillaConfig {
                trainable: false,
                amplitudes: Some(s.amplitudes().iter().map(|a| [a.re, a.im]).collect()),
                ..Default::default()
            }),
            AncillaMode::Angles => Some(AncillaConfig {
                trainable: true,
                eta: Some(self.ancilla_defaults[0]),
                xi: Some(self.ancilla_defaults[1]),
                amplitudes: None,
            }),
            AncillaMode::UnitVector => Some(AncillaConfig {
                trainable: true,
                amplitudes: Some(
                    unit_vector_state(&self.ancilla_defaults)
                        .expect("defaults validated")
                        .iter()
                        .map(|a| [a.re, a.im])
                        .collect(),
                ),
                ..Default::default()
            }),
        };
        NetworkFile {
            num_qubits: self.num_qubits,
            register: self.register.clone(),
            ancillae: self.ancillae.clone(),
            couplings,
            fields,
            ancilla_state,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn register(&self) -> &[usize] {
        &self.register
    }

    pub fn ancillae(&self) -> &[usize] {
        &self.ancillae
    }

    pub fn register_dim(&self) -> usize {
        1 << self.register.len()
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.ancillae.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn group_names(&self) -> &[String] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_id(&self, name: &str) -> Result<usize> {
        self.groups
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| Error::UnknownGroup(name.to_string()))
    }

    pub fn ancilla_mode(&self) -> &AncillaMode {
        &self.ancilla
    }

    /// Number of trailing ancilla parameters.
    pub fn num_ancilla_params(&self) -> usize {
        match self.ancilla {
            AncillaMode::Fixed(_) => 0,
            AncillaMode::Angles => 2,
            AncillaMode::UnitVector => 2 * self.ancilla_dim() - 1,
        }
    }

    pub fn num_free_params(&self) -> usize {
        self.num_groups() + self.num_ancilla_params()
    }

    /// Default ancilla parameters from the network file.
    pub fn ancilla_defaults(&self) -> &[f64] {
        &self.ancilla_defaults
    }

    /// Parameter vector with the given group values and the default ancilla
    /// parameters.
    pub fn params(&self, values: Vec<f64>) -> ParameterVector {
        ParameterVector::with_ancilla(values, self.ancilla_defaults.clone())
    }

    pub fn params_from_flat(&self, flat: &[f64]) -> Result<ParameterVector> {
        if flat.len() != self.num_free_params() {
            return Err(Error::ParameterLength {
                expected: self.num_free_params(),
                found: flat.len(),
            });
        }
        let (v, a) = flat.split_at(self.num_groups());
        Ok(ParameterVector::with_ancilla(v.to_vec(), a.to_vec()))
    }

    pub fn validate_params(&self, lambda: &ParameterVector) -> Result<()> {
        if lambda.values.len() != self.num_groups() {
            return Err(Error::ParameterLength {
                expected: self.num_groups(),
                found: lambda.values.len(),
            });
        }
        if lambda.ancilla.len() != self.num_ancilla_params() {
            return Err(Error::ParameterLength {
                expected: self.num_free_params(),
                found: lambda.len(),
            });
        }
        if lambda.values.iter().chain(&lambda.ancilla).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector".into()));
        }
        Ok(())
    }

    /// Pauli string of a term in the global ordering, with its 1/4 or 1/2 factor.
    pub fn term_operator(&self, term: &Term) -> (PauliString, f64) {
        match term.kind {
            TermKind::Coupling { sites, axes } => (
                PauliString::pair(
                    self.num_qubits,
                    (self.position[sites.0], axes.0),
                    (self.position[sites.1], axes.1),
                ),
                COUPLING_FACTOR,
            ),
            TermKind::Field { site, axis } => (
                PauliString::single(self.num_qubits, self.position[site], axis),
                FIELD_FACTOR,
            ),
        }
    }

    /// `dH / d lambda_group`.
    pub fn term_derivative(&self, group: usize) -> Result<HermitianOperator> {
        if group >= self.num_groups() {
            return Err(Error::UnknownGroup(format!("#{group}")));
        }
        Ok(HermitianOperator::from_terms(
            self.num_qubits,
            self.terms.iter().filter(|t| t.group == group).map(|t| {
                let (p, f) = self.term_operator(t);
                (p, f * t.mult)
            }),
        ))
    }

    pub fn assemble_hamiltonian(&self, lambda: &ParameterVector) -> Result<HermitianOperator> {
        self.validate_params(lambda)?;
        Ok(HermitianOperator::from_terms(
            self.num_qubits,
            self.terms.iter().map(|t| {
                let (p, f) = self.term_operator(t);
                (p, f * t.mult * lambda.values[t.group])
            }),
        ))
    }

    /// The ancilla state selected by `lambda` (fixed, or built from the
    /// trailing parameters).
    pub fn ancilla_state(&self, lambda: &ParameterVector) -> Result<AncillaState> {
        match &self.ancilla {
            AncillaMode::Fixed(s) => Ok(s.clone()),
            AncillaMode::Angles => {
                check_ancilla_len(&lambda.ancilla, 2)?;
                AncillaState::from_angles(lambda.ancilla[0], lambda.ancilla[1])
            }
            AncillaMode::UnitVector => {
                check_ancilla_len(&lambda.ancilla, 2 * self.ancilla_dim() - 1)?;
                AncillaState::new(unit_vector_state(&lambda.ancilla)?)
            }
        }
    }

    /// Raw (not gauge-fixed) ancilla vector and its derivatives with respect
    /// to each ancilla parameter. Empty derivative list for fixed states.
    pub(crate) fn ancilla_jacobian(&self, lambda: &ParameterVector) -> Result<(CVector, Vec<CVector>)> {
        match &self.ancilla {
            AncillaMode::Fixed(s) => Ok((s.amplitudes().clone(), Vec::new())),
            AncillaMode::Angles => {
                check_ancilla_len(&lambda.ancilla, 2)?;
                let (eta, xi) = (lambda.ancilla[0], lambda.ancilla[1]);
                let d_eta = CVector::from_vec(vec![
                    C64::new(-eta.sin(), 0.0),
                    Complex64::from_polar(eta.cos(), xi),
                ]);
                let d_xi = CVector::from_vec(vec![
                    C64::new(0.0, 0.0),
                    Complex64::from_polar(eta.sin(), xi) * C64::new(0.0, 1.0),
                ]);
                Ok((angle_vector(eta, xi), vec![d_eta, d_xi]))
            }
            AncillaMode::UnitVector => {
                let p = &lambda.ancilla;
                check_ancilla_len(p, 2 * self.ancilla_dim() - 1)?;
                let u = unit_vector_raw(p);
                let norm = u.norm();
                let psi = &u / C64::new(norm, 0.0);
                let mut derivs = Vec::with_capacity(p.len());
                for k in 0..p.len() {
                    let mut du = CVector::zeros(u.len());
                    if k == 0 {
                        du[0] = C64::new(1.0, 0.0);
                    } else {
                        let idx = k.div_ceil(2);
                        du[idx] = if k % 2 == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
                    }
                    let overlap = psi.dotc(&du).re;
                    derivs.push((du - &psi * C64::new(overlap, 0.0)) / C64::new(norm, 0.0));
                }
                Ok((psi, derivs))
            }
        }
    }

    /// True iff `S (x) 1_A` commutes with every tie-group operator, so the
    /// symmetry holds for all parameter values.
    pub fn check_symmetry(&self, s: &UnitaryMatrix) -> Result<bool> {
        if s.dim() != self.register_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.register_dim(),
                found: s.dim(),
            });
        }
        let positions: Vec<usize> = (0..self.register.len()).collect();
        let big = embed_matrix(s.matrix(), &positions, self.num_qubits)?;
        for g in 0..self.num_groups() {
            let d = self.term_derivative(g)?;
            let h = d.dense();
            if max_abs_diff(&(h * &big), &(&big * h)) >= 1e-10 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn check_ancilla_len(p: &[f64], expected: usize) -> Result<()> {
    if p.len() != expected {
        return Err(Error::ParameterLength { expected, found: p.len() });
    }
    Ok(())
}

fn amplitudes_vector(a: &[[f64; 2]], dim: usize) -> Result<CVector> {
    if a.len() != dim {
        return Err(Error::InvalidSpec(format!("ancilla amplitudes: expected {dim} entries, found {}", a.len())));
    }
    Ok(CVector::from_iterator(dim, a.iter().map(|[re, im]| C64::new(*re, *im))))
}

fn unit_vector_raw(p: &[f64]) -> CVector {
    let dim = p.len().div_ceil(2);
    let mut u = CVector::zeros(dim);
    u[0] = C64::new(p[0], 0.0);
    for k in 1..dim {
        u[k] = C64::new(p[2 * k - 1], p[2 * k]);
    }
    u
}

fn unit_vector_state(p: &[f64]) -> Result<CVector> {
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ancilla parameters".into()));
    }
    let u = unit_vector_raw(p);
    let norm = u.norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidState("ancilla parameters are all zero".into()));
    }
    Ok(u / C64::new(norm, 0.0))
}

fn unit_vector_params(s: &AncillaState) -> Vec<f64> {
    let a = s.amplitudes();
    let mut p = vec![a[0].re];
    for k in 1..a.len() {
        p.push(a[k].re);
        p.push(a[k].im);
    }
    p
}

/// Dimensionless values to MHz for a gate time in seconds: `v / (t * 1e6)`.
pub fn to_physical_units(values: &[f64], gate_time: f64) -> Result<Vec<f64>> {
    if !(gate_time > 0.0) || !gate_time.is_finite() {
        return Err(Error::InvalidInput(format!("gate time must be positive, got {gate_time}")));
    }
    Ok(values.iter().map(|v| v / (gate_time * 1e6)).collect())
}

/// Inverse of [`to_physical_units`].
pub fn from_physical_units(mhz: &[f64], gate_time: f64) -> Result<Vec<f64>> {
    if !(gate_time > 0.0) || !gate_time.is_finite() {
        return Err(Error::InvalidInput(format!("gate time must be positive, got {gate_time}")));
    }
    Ok(mhz.iter().map(|v| v * gate_time * 1e6).collect())
}
