//! Experiment documents: a preset or an explicit network, plus overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gatenet_core::gates::{self, GateTarget};
use gatenet_core::network::{NetworkFile, NetworkSpec, ParameterVector};
use gatenet_core::presets::{self, Preset, PresetOptions};
use gatenet_core::trainer::{PerturbSpec, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

/// Target gate: a library name, an inline matrix of `[re, im]` pairs, or a
/// matrix file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetConfig {
    Name(String),
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
    File { file: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub preset: Option<String>,
    /// Remote-logic family index.
    pub n: Option<u32>,
    /// Remote-logic offset.
    pub alpha: Option<f64>,
    pub network: Option<NetworkFile>,
    pub target: Option<TargetConfig>,
    /// Group values; groups left out keep the preset value (or 0).
    pub params: BTreeMap<String, f64>,
    pub eta: Option<f64>,
    pub xi: Option<f64>,
    pub train: TrainConfig,
    pub perturb: PerturbSpec,
}

const TOP_LEVEL: [&str; 10] = [
    "preset", "n", "alpha", "network", "target", "params", "eta", "xi", "train", "perturb",
];

/// Parse `key=value`; the value is read as JSON when possible, else as a
/// string. Bare keys that are not top-level fields address `params`.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut path: Vec<&str> = key.split('.').collect();
    if path.len() == 1 && !TOP_LEVEL.contains(&path[0]) {
        path.insert(0, "params");
    }
    let mut node = doc;
    for (i, part) in path.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("`{key}`: `{}` is not an object", path[..i].join(".")))),
        };
        if i + 1 == path.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("path is non-empty")
}

pub fn load_document(config: Option<&Path>, preset: Option<&str>, sets: &[String]) -> Result<Experiment, CliError> {
    let mut doc = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !doc.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    if let Some(p) = preset {
        doc["preset"] = Value::String(p.to_string());
    }
    for s in sets {
        apply_override(&mut doc, s)?;
    }
    serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))
}

/// Everything a command needs after defaults and overrides are applied.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub name: String,
    pub network: NetworkFile,
    pub spec: NetworkSpec,
    pub params: ParameterVector,
    pub target: GateTarget,
    pub expected_fbar: Option<f64>,
    pub reference_mhz: Vec<Option<f64>>,
    pub experiment: Experiment,
}

fn target_from(cfg: &TargetConfig) -> Result<GateTarget, CliError> {
    Ok(match cfg {
        TargetConfig::Name(n) => gates::by_name(n)?,
        TargetConfig::Matrix { matrix } => gates::custom_gate_from_json("custom", &serde_json::to_string(matrix).expect("serializable"))?,
        TargetConfig::File { file } => gates::custom_gate(file)?,
    })
}

impl Resolved {
    fn from_preset(mut p: Preset, exp: &Experiment) -> Result<Resolved, CliError> {
        for (k, v) in &exp.params {
            p.set(k, *v)?;
        }
        if let Some(eta) = exp.eta {
            p.set("eta", eta)?;
        }
        if let Some(xi) = exp.xi {
            p.set("xi", xi)?;
        }
        Ok(Resolved {
            name: p.name.clone(),
            network: p.network,
            spec: p.spec,
            params: p.params,
            target: p.target,
            expected_fbar: Some(p.expected_fbar),
            reference_mhz: p.reference_mhz,
            experiment: exp.clone(),
        })
    }

    pub fn from_experiment(exp: &Experiment) -> Result<Resolved, CliError> {
        match (&exp.preset, &exp.network) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `preset` or `network`, not both".into())),
            (None, None) => Err(CliError::Config("need a `preset` or a `network`".into())),
            (Some(name), None) => {
                if exp.target.is_some() {
                    return Err(CliError::Config("presets fix their target; drop `target`".into()));
                }
                let defaults = PresetOptions::default();
                let opts = PresetOptions {
                    n: exp.n.unwrap_or(defaults.n),
                    alpha: exp.alpha.unwrap_or(defaults.alpha),
                };
                if name != "remote-sqswap" && (exp.n.is_some() || exp.alpha.is_some()) {
                    return Err(CliError::Config(format!("`n`/`alpha` do not apply to preset `{name}`")));
                }
                Resolved::from_preset(presets::by_name(name, &opts)?, exp)
            }
            (None, Some(network)) => {
                let spec = NetworkSpec::from_file(network)?;
                let target = target_from(
                    exp.target
                        .as_ref()
                        .ok_or_else(|| CliError::Config("a `network` needs a `target`".into()))?,
                )?;
                let mut values = vec![0.0; spec.num_groups()];
                for (k, v) in &exp.params {
                    values[spec.group_id(k)?] = *v;
                }
                let mut params = spec.params(values);
                for (key, v) in [("eta", exp.eta), ("xi", exp.xi)] {
                    if let Some(v) = v {
                        if spec.num_ancilla_params() != 2 {
                            return Err(CliError::Config(format!("`{key}` needs a single trainable ancilla")));
                        }
                        params.ancilla[usize::from(key == "xi")] = v;
                    }
                }
                spec.validate_params(&params)?;
                Ok(Resolved {
                    name: "custom".into(),
                    network: network.clone(),
                    reference_mhz: vec![None; spec.num_groups()],
                    spec,
                    params,
                    target,
                    expected_fbar: None,
                    experiment: exp.clone(),
                })
            }
        }
    }

    /// Remove a group (and its terms) from the network.
    pub fn drop_group(&mut self, group: &str) -> Result<(), CliError> {
        let g = self.spec.group_id(group)?;
        self.network.couplings.retain(|c| c.group != group);
        self.network.fields.retain(|f| f.group != group);
        self.spec = NetworkSpec::from_file(&self.network)?;
        self.params.values.remove(g);
        self.reference_mhz.remove(g);
        Ok(())
    }

    /// Group values keyed by group name.
    pub fn named_params(&self) -> BTreeMap<String, f64> {
        self.spec
            .group_names()
            .iter()
            .cloned()
            .zip(self.params.values.iter().copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_address_paths() {
        let mut v = serde_json::json!({});
        apply_override(&mut v, "xi=0").unwrap();
        apply_override(&mut v, "J_xx_34=15.1").unwrap();
        apply_override(&mut v, "train.eps0=0.5").unwrap();
        apply_override(&mut v, "preset=toffoli").unwrap();
        assert_eq!(v["xi"], 0);
        assert_eq!(v["params"]["J_xx_34"], 15.1);
        assert_eq!(v["train"]["eps0"], 0.5);
        assert_eq!(v["preset"], "toffoli");
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "preset.x=1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = load_document(None, Some("toffoli"), &["train.bogus=1".into()]).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn preset_resolution() {
        let exp = load_document(None, Some("remote-sqswap"), &["n=2".into(), "alpha=2.5".into()]).unwrap();
        let r = Resolved::from_experiment(&exp).unwrap();
        assert_eq!(r.spec.num_groups(), 3);
        let exp = load_document(None, Some("toffoli"), &["n=2".into()]).unwrap();
        assert!(Resolved::from_experiment(&exp).is_err());
    }
}
