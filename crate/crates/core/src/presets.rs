//! Bundled networks with known good parameters.
//!
//! Group names use 1-based qubit labels (`J_zz_12` couples sites 0 and 1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{self, GateTarget};
use crate::network::{AncillaConfig, CouplingEntry, FieldEntry, NetworkFile, NetworkSpec, ParameterVector};

/// A network, a parameter point and the gate it is meant to implement.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub network: NetworkFile,
    pub spec: NetworkSpec,
    pub params: ParameterVector,
    pub target: GateTarget,
    /// Average gate fidelity expected at `params`.
    pub expected_fbar: f64,
    /// Reference MHz values at 60 ns per group, where available.
    pub reference_mhz: Vec<Option<f64>>,
}

/// Knobs for the parameterized remote-logic family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    pub n: u32,
    pub alpha: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { n: 1, alpha: 0.0 }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["toffoli", "fredkin", "remote-sqswap"];

pub fn by_name(name: &str, opts: &PresetOptions) -> Result<Preset> {
    match name {
        "toffoli" => Ok(toffoli()),
        "fredkin" => Ok(fredkin()),
        "remote-sqswap" => remote_sqswap(opts.n, opts.alpha),
        other => Err(Error::InvalidInput(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn coupling(a: usize, b: usize, axes: &str, group: &str, mult: f64) -> CouplingEntry {
    CouplingEntry { sites: [a, b], axes: axes.into(), group: group.into(), mult }
}

fn field(site: usize, axis: &str, group: &str, mult: f64) -> FieldEntry {
    FieldEntry { site, axis: axis.into(), group: group.into(), mult }
}

fn heisenberg(a: usize, b: usize, group: &str) -> Vec<CouplingEntry> {
    ["xx", "yy", "zz"].iter().map(|ax| coupling(a, b, ax, group, 1.0)).collect()
}

impl Preset {
    fn build(
        name: &str,
        network: NetworkFile,
        values: &[(&str, f64, Option<f64>)],
        target: GateTarget,
        expected_fbar: f64,
    ) -> Result<Preset> {
        let spec = NetworkSpec::from_file(&network)?;
        let mut v = vec![0.0; spec.num_groups()];
        let mut reference = vec![None; spec.num_groups()];
        for &(group, value, mhz) in values {
            let g = spec.group_id(group)?;
            v[g] = value;
            reference[g] = mhz;
        }
        let params = spec.params(v);
        Ok(Preset {
            name: name.into(),
            network,
            spec,
            params,
            target,
            expected_fbar,
            reference_mhz: reference,
        })
    }

    /// Override a group value or an ancilla angle (`eta`, `xi`).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite(key.into()));
        }
        match key {
            "eta" | "xi" => {
                if self.spec.num_ancilla_params() != 2 {
                    return Err(Error::InvalidInput(format!("preset `{}` has no ancilla angles", self.name)));
                }
                self.params.ancilla[usize::from(key == "xi")] = value;
            }
            group => {
                let g = self.spec.group_id(group)?;
                self.params.values[g] = value;
            }
        }
        Ok(())
    }

    /// Remove a tie group and its terms from the network.
    pub fn drop_group(&mut self, group: &str) -> Result<()> {
        let g = self.spec.group_id(group)?;
        self.network.couplings.retain(|c| c.group != group);
        self.network.fields.retain(|f| f.group != group);
        self.spec = NetworkSpec::from_file(&self.network)?;
        self.params.values.remove(g);
        self.reference_mhz.remove(g);
        Ok(())
    }
}

/// CCNOT on sites 0-2 with one ancilla (site 3) in a trainable angle state.
pub fn toffoli_network() -> NetworkFile {
    NetworkFile {
        num_qubits: 4,
        register: vec![0, 1, 2],
        ancillae: vec![3],
        couplings: vec![
            coupling(0, 1, "zz", "J_zz_12", 1.0),
            coupling(0, 2, "zz", "J_zz_13", 1.0),
            coupling(1, 2, "zz", "J_zz_13", 1.0),
            coupling(0, 3, "zz", "J_zz_14", 1.0),
            coupling(1, 3, "zz", "J_zz_14", 1.0),
            coupling(2, 3, "xx", "J_xx_34", 1.0),
        ],
        fields: vec![
            field(0, "z", "h_z_1", 1.0),
            field(1, "z", "h_z_1", 1.0),
            field(2, "z", "J_zz_13", 1.0),
            field(3, "z", "h_z_4", 1.0),
            field(2, "x", "h_x_3", 1.0),
            field(3, "x", "h_x_4", 1.0),
        ],
        ancilla_state: Some(AncillaConfig {
            trainable: true,
            eta: Some(TOFFOLI_ETA),
            xi: Some(TOFFOLI_XI),
            amplitudes: None,
        }),
    }
}

pub const TOFFOLI_ETA: f64 = 0.8182;
/// Sign chosen for the `e^{-iH}` convention used throughout.
pub const TOFFOLI_XI: f64 = -0.0587;

pub fn toffoli() -> Preset {
    Preset::build(
        "toffoli",
        toffoli_network(),
        &[
            ("J_zz_12", -8.940, Some(-149.2)),
            ("J_zz_13", -4.957, Some(-82.71)),
            ("J_zz_14", -5.657, Some(-94.39)),
            ("J_xx_34", 15.06, Some(251.3)),
            ("h_z_1", -2.428, Some(-40.52)),
            ("h_z_4", -0.165, Some(-2.751)),
            ("h_x_3", -19.08, Some(-318.4)),
            ("h_x_4", -4.267, Some(-71.2)),
        ],
        gates::toffoli(),
        0.9998,
    )
    .expect("toffoli preset is valid")
}

/// CSWAP on sites 0-2 (control 0) with a spectator ancilla on site 3.
pub fn fredkin_network() -> NetworkFile {
    let mut couplings = vec![
        coupling(0, 1, "xx", "J_xx_12", 1.0),
        coupling(0, 2, "xx", "J_xx_12", 1.0),
        coupling(1, 3, "xx", "J_xx_24", 1.0),
        coupling(2, 3, "xx", "J_xx_24", 1.0),
        coupling(0, 1, "zz", "J_zz_12", 1.0),
        coupling(0, 2, "zz", "J_zz_12", 1.0),
    ];
    couplings.extend(heisenberg(1, 2, "J_23"));
    NetworkFile {
        num_qubits: 4,
        register: vec![0, 1, 2],
        ancillae: vec![3],
        couplings,
        fields: vec![field(3, "x", "h_x_4", 1.0), field(0, "z", "h_z_1", 1.0)],
        ancilla_state: None,
    }
}

/// Four-digit reference values, polished to full precision; the
/// rounded values alone leave a 1e-6 fidelity gap.
pub fn fredkin() -> Preset {
    Preset::build(
        "fredkin",
        fredkin_network(),
        &[
            ("J_xx_12", 13.603495258325486, Some(227.0)),
            ("J_xx_24", 8.40045657794327, Some(140.2)),
            ("J_zz_12", 11.151547639487035, Some(186.1)),
            ("J_23", -1.5 * PI, Some(-78.62)),
            ("h_x_4", 1.025, Some(17.11)),
            // printed as 54.42 MHz, which does not match pi at 60 ns
            ("h_z_1", PI, None),
        ],
        gates::fredkin(),
        1.0,
    )
    .expect("fredkin preset is valid")
}

/// Closed-form remote-logic couplings `(J12, J13, J23)` for family index `n`.
pub fn remote_couplings(n: u32, alpha: f64) -> (f64, f64, f64) {
    let k = 2.0 * f64::from(n);
    let r = PI * (k * k - 1.0).sqrt() / 8f64.sqrt();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    (alpha + r, alpha - r, alpha + sign * PI)
}

/// Labels q1..q4 are sites 0..3; the register is {q1, q4} and the ancillae
/// {q2, q3} start in the singlet. With `tied` false every coupling gets its
/// own group.
pub fn remote_network(tied: bool) -> NetworkFile {
    let pairs: [(usize, usize, &str, &str); 5] = [
        (0, 1, "J_12", "J_12"),
        (1, 3, "J_12", "J_24"),
        (0, 2, "J_13", "J_13"),
        (2, 3, "J_13", "J_34"),
        (1, 2, "J_23", "J_23"),
    ];
    let couplings = pairs
        .iter()
        .flat_map(|&(a, b, g_tied, g_free)| heisenberg(a, b, if tied { g_tied } else { g_free }))
        .collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    NetworkFile {
        num_qubits: 4,
        register: vec![0, 3],
        ancillae: vec![1, 2],
        couplings,
        fields: vec![],
        ancilla_state: Some(AncillaConfig {
            trainable: false,
            eta: None,
            xi: None,
            amplitudes: Some(vec![[0.0, 0.0], [s, 0.0], [-s, 0.0], [0.0, 0.0]]),
        }),
    }
}

fn remote_preset(n: u32, alpha: f64, tied: bool) -> Result<Preset> {
    if n == 0 {
        return Err(Error::InvalidInput("remote-logic family index n must be >= 1".into()));
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha".into()));
    }
    let (j12, j13, j23) = remote_couplings(n, alpha);
    let values: Vec<(&str, f64, Option<f64>)> = if tied {
        vec![("J_12", j12, None), ("J_13", j13, None), ("J_23", j23, None)]
    } else {
        vec![
            ("J_12", j12, None),
            ("J_24", j12, None),
            ("J_13", j13, None),
            ("J_34", j13, None),
            ("J_23", j23, None),
        ]
    };
    Preset::build("remote-sqswap", remote_network(tied), &values, gates::sqrt_swap(), 1.0)
}

/// sqrt(SWAP) between q1 and q4 mediated by a singlet pair.
pub fn remote_sqswap(n: u32, alpha: f64) -> Result<Preset> {
    remote_preset(n, alpha, true)
}

/// Same point as `remote_sqswap` with one group per coupling.
pub fn remote_sqswap_untied(n: u32, alpha: f64) -> Result<Preset> {
    remote_preset(n, alpha, false)
}

/// Two register qubits with a direct Heisenberg coupling `J_14 = pi/2`.
pub fn direct_sqswap() -> Preset {
    let network = NetworkFile {
        num_qubits: 2,
        register: vec![0, 1],
        ancillae: vec![],
        couplings: heisenberg(0, 1, "J_14"),
        fields: vec![],
        ancilla_state: None,
    };
    Preset::build("direct-sqswap", network, &[("J_14", PI / 2.0, None)], gates::sqrt_swap(), 1.0)
        .expect("direct preset is valid")
}

/// Single field `h^x` on one qubit targeting X; `F(h) = sin^2(h/2)`.
pub fn toy_network() -> NetworkFile {
    NetworkFile {
        num_qubits: 1,
        register: vec![0],
        ancillae: vec![],
        couplings: vec![],
        fields: vec![field(0, "x", "h_x", 1.0)],
        ancilla_state: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::avg_fidelity;

    fn fbar(p: &Preset) -> f64 {
        let anc = p.spec.ancilla_state(&p.params).unwrap();
        avg_fidelity(&p.spec, &p.params, &anc, &p.target).unwrap()
    }

    #[test]
    fn presets_hit_their_fidelities() {
        let t = toffoli();
        assert!((fbar(&t) - 0.9998).abs() < 5e-4, "{}", fbar(&t));
        assert!(1.0 - fbar(&fredkin()) < 1e-6);
        assert!(1.0 - fbar(&remote_sqswap(1, 0.0).unwrap()) < 1e-9);
        assert!(1.0 - fbar(&remote_sqswap_untied(2, 1.0).unwrap()) < 1e-9);
        assert!(1.0 - fbar(&direct_sqswap()) < 1e-9);
    }

    #[test]
    fn overrides_and_drops() {
        let mut t = toffoli();
        t.set("xi", 0.0).unwrap();
        assert_eq!(t.params.ancilla, vec![TOFFOLI_ETA, 0.0]);
        t.set("h_x_4", 1.0).unwrap();
        assert!(t.set("nope", 1.0).is_err());
        t.drop_group("h_x_3").unwrap();
        assert_eq!(t.spec.num_groups(), 7);
        assert_eq!(t.params.values.len(), 7);
        let mut r = remote_sqswap(1, 0.0).unwrap();
        assert!(r.set("eta", 0.1).is_err());
        assert!(by_name("cnot", &PresetOptions::default()).is_err());
        assert!(remote_sqswap(0, 0.0).is_err());
    }

    #[test]
    fn symmetries_hold() {
        let t = toffoli();
        assert!(t.spec.check_symmetry(&t.target.symmetries[0]).unwrap());
        let f = fredkin();
        assert!(f.spec.check_symmetry(&f.target.symmetries[0]).unwrap());
    }
}
