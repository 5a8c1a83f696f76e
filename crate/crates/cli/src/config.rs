//! Run configuration: built-in defaults, then a JSON file, then flags.

use std::path::{Path, PathBuf};

use mleqc::decoherence::BOLTZMANN_HARTREE_PER_KELVIN;
use mleqc::dynamics::{na2_model, ControlField, Envelope, ModelSystem, DEFAULT_T_FINAL, NA2_GROUND_VIBRATIONAL_GAP};
use mleqc::optimizer::{FidelityKind, GAConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Either a named preset or an explicit level scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_energies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoding_dim: Option<usize>,
}

impl ModelSection {
    pub fn na2() -> Self {
        Self { preset: Some("na2".into()), level_energies: None, dipole: None, encoding_dim: None }
    }

    pub fn build(&self) -> Result<ModelSystem, CliError> {
        let explicit = (&self.level_energies, &self.dipole, self.encoding_dim);
        match (&self.preset, explicit) {
            (Some(p), (None, None, None)) if p == "na2" => Ok(na2_model()),
            (Some(p), (None, None, None)) => Err(CliError::Usage(format!("model: unknown preset '{p}' (known: na2)"))),
            (None, (Some(e), Some(d), Some(n))) => {
                ModelSystem::new(e.clone(), d.clone(), n).map_err(|err| CliError::Usage(format!("model: {err}")))
            }
            _ => Err(CliError::Usage(
                "model: give either \"preset\" or all of \"level_energies\", \"dipole\", \"encoding_dim\"".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub t_final: f64,
    /// Defaults to a Gaussian centred in the window with FWHM `t_final / 2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { t_final: DEFAULT_T_FINAL, envelope: None }
    }
}

impl FieldSection {
    pub fn template(&self, system: &ModelSystem) -> Result<ControlField, CliError> {
        let mut field = ControlField::resonant_template(system, self.t_final);
        if let Some(env) = self.envelope {
            field.envelope = env;
        }
        field.validate().map_err(|e| CliError::Usage(format!("field: {e}")))?;
        Ok(field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    /// Ground-surface vibrational gap, Hartree.
    pub e_v: f64,
    pub boltzmann_constant: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            t_min: 70.0,
            t_max: 120.0,
            steps: 26,
            e_v: NA2_GROUND_VIBRATIONAL_GAP,
            boltzmann_constant: BOLTZMANN_HARTREE_PER_KELVIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephaseSection {
    pub samples: usize,
    pub seed: u64,
}

impl Default for DephaseSection {
    fn default() -> Self {
        Self { samples: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from(".") }
    }
}

/// Everything a run needs. Without a config file the built-in defaults
/// apply (Na2 model); a config file must name its model explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default)]
    pub ga: GAConfig,
    #[serde(default = "default_target")]
    pub target: FidelityKind,
    /// Overrides `ga.seed` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub dephase: DephaseSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_target() -> FidelityKind {
    FidelityKind::MleX
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::na2(),
            field: FieldSection::default(),
            ga: GAConfig::default(),
            target: default_target(),
            seed: None,
            sweep: SweepSection::default(),
            dephase: DephaseSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        // Check for the model section first so its absence is reported by
        // name rather than as a generic parse failure.
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
        match value.as_object() {
            Some(obj) if obj.contains_key("model") => {}
            Some(_) => return Err(CliError::Usage("config is missing the required \"model\" section".into())),
            None => return Err(CliError::Usage("config must be a JSON object".into())),
        }
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.normalize();
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json(&text)
            }
        }
    }

    /// Fold the global seed into the GA section.
    pub fn normalize(&mut self) {
        if let Some(s) = self.seed {
            self.ga.seed = s;
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.normalize();
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Manifest written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub library_version: &'static str,
    pub command: &'a str,
    pub config: &'a T,
}

impl<'a, T: Serialize> Manifest<'a, T> {
    pub fn new(command: &'a str, config: &'a T) -> Self {
        Self { tool: "mleqc", version: env!("CARGO_PKG_VERSION"), library_version: mleqc::VERSION, command, config }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let text = r#"{
            "model": {"preset": "na2"},
            "field": {"t_final": 30000.0, "envelope": {"kind": "flat_top", "params": {"rise": 500.0}}},
            "ga": {"population_size": 50, "generations": 10, "mutation_rate": 0.25},
            "target": "sle_z",
            "seed": 11,
            "sweep": {"steps": 5},
            "dephase": {"samples": 100, "seed": 3},
            "output": {"dir": "out"}
        }"#;
        let a = RunConfig::from_json(text).unwrap();
        assert_eq!(a.ga.seed, 11);
        assert_eq!(a.ga.crossover_rate, GAConfig::default().crossover_rate);
        let b = RunConfig::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(RunConfig::from_json(&RunConfig::default().to_json()).unwrap(), RunConfig::default());
    }

    #[test]
    fn missing_model_is_named() {
        let err = RunConfig::from_json(r#"{"ga": {}}"#).unwrap_err();
        assert!(matches!(err, CliError::Usage(ref m) if m.contains("\"model\"")), "{err:?}");
    }

    #[test]
    fn unknown_fields_are_located() {
        let err = RunConfig::from_json("{\"model\": {\"preset\": \"na2\"},\n \"ga\": {\"populaton\": 3}}").unwrap_err();
        let CliError::Usage(m) = err else { panic!() };
        assert!(m.contains("populaton") && m.contains("line 2"), "{m}");
    }

    #[test]
    fn explicit_model_builds() {
        let m = ModelSection {
            preset: None,
            level_energies: Some(vec![0.0, 0.1]),
            dipole: Some(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            encoding_dim: Some(1),
        };
        assert_eq!(m.build().unwrap().dim(), 2);
        assert!(ModelSection { preset: Some("h2".into()), ..m.clone() }.build().is_err());
    }
}
