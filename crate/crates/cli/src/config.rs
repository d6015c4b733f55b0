use std::path::{Path, PathBuf};

use cbo_core::engine::BoConfig;
use cbo_core::testbed::{testbed_bo_config, DiagnosticConfig, TestbedConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    BraninSequential,
    BraninParallel,
    BraninRandom,
    Diagnostic,
    TestbedConstrained,
    TestbedUnconstrained,
    SmilesLint,
}

impl Experiment {
    fn uses_bo(self) -> bool {
        matches!(self, Self::BraninSequential | Self::BraninParallel | Self::TestbedConstrained | Self::TestbedUnconstrained)
    }

    fn uses_testbed(self) -> bool {
        matches!(self, Self::Diagnostic | Self::TestbedConstrained | Self::TestbedUnconstrained)
    }
}

/// The config file. Module sections are partial overrides applied on top of
/// the experiment's preset.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub bo: Option<Value>,
    #[serde(default)]
    pub testbed: Option<Value>,
    #[serde(default)]
    pub diagnostic: Option<Value>,
    /// Evaluations for `branin_random`.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Input file for `smiles_lint`, relative to the config file.
    #[serde(default)]
    pub smiles_input: Option<PathBuf>,
}

/// Fully expanded settings, echoed into every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bo: Option<BoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testbed: Option<TestbedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<DiagnosticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smiles_input: Option<PathBuf>,
}

pub const DEFAULT_RANDOM_BUDGET: usize = 60;

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let (Some(input), Some(dir)) = (&cfg.smiles_input, path.parent()) {
            if input.is_relative() {
                cfg.smiles_input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Expands presets, applies overrides and validates every section.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<ResolvedConfig, CliError> {
        let e = self.experiment;
        let seed = seed_override.unwrap_or(self.seed);
        let unused = |name: &str, present: bool| -> Result<(), CliError> {
            if present {
                Err(CliError::Config(format!("`{name}` is not used by experiment {e:?}")))
            } else {
                Ok(())
            }
        };

        let bo = if e.uses_bo() {
            let preset = match e {
                Experiment::BraninSequential => BoConfig::branin_sequential(),
                Experiment::BraninParallel => BoConfig::default(),
                _ => testbed_bo_config(seed),
            };
            let mut bo: BoConfig = apply_overrides("bo", &preset, self.bo.as_ref())?;
            for ptr in ["/seed", "/bnn/train/seed"] {
                if self.bo.as_ref().and_then(|v| v.pointer(ptr)).is_some() {
                    return Err(CliError::Config(format!("bo{}: seeds are derived from the top-level seed", ptr.replace('/', "."))));
                }
            }
            bo.seed = seed;
            bo.validate().map_err(|err| CliError::Config(format!("bo: {err}")))?;
            Some(bo)
        } else {
            unused("bo", self.bo.is_some())?;
            None
        };

        let testbed = if e.uses_testbed() {
            let preset = if e == Experiment::Diagnostic { TestbedConfig::default() } else { TestbedConfig::desk_scale() };
            if self.testbed.as_ref().and_then(|v| v.get("seed")).is_some() {
                return Err(CliError::Config("testbed.seed: set the seed at the top level".into()));
            }
            let mut t: TestbedConfig = apply_overrides("testbed", &preset, self.testbed.as_ref())?;
            t.seed = seed;
            t.validate().map_err(|err| CliError::Config(format!("testbed: {err}")))?;
            Some(t)
        } else {
            unused("testbed", self.testbed.is_some())?;
            None
        };

        let diagnostic = if e == Experiment::Diagnostic {
            if self.diagnostic.as_ref().and_then(|v| v.get("seed")).is_some() {
                return Err(CliError::Config("diagnostic.seed: set the seed at the top level".into()));
            }
            let mut d: DiagnosticConfig = apply_overrides("diagnostic", &DiagnosticConfig::default(), self.diagnostic.as_ref())?;
            d.seed = seed;
            d.validate().map_err(|err| CliError::Config(format!("diagnostic: {err}")))?;
            let anchors = testbed.as_ref().map_or(0, |t| t.n_anchors);
            let needed = d.points_per_group * (1 + d.noise_levels.len());
            if anchors < needed {
                return Err(CliError::Config(format!("diagnostic needs {needed} anchors, testbed.n_anchors is {anchors}")));
            }
            Some(d)
        } else {
            unused("diagnostic", self.diagnostic.is_some())?;
            None
        };

        let budget = if e == Experiment::BraninRandom {
            let b = self.budget.unwrap_or(DEFAULT_RANDOM_BUDGET);
            if b == 0 {
                return Err(CliError::Config("budget must be at least 1".into()));
            }
            Some(b)
        } else {
            unused("budget", self.budget.is_some())?;
            None
        };

        let smiles_input = if e == Experiment::SmilesLint {
            let path = self.smiles_input.clone().ok_or_else(|| CliError::Config("smiles_lint needs `smiles_input`".into()))?;
            if !path.is_file() {
                return Err(CliError::Config(format!("smiles_input {} is not a readable file", path.display())));
            }
            Some(path)
        } else {
            unused("smiles_input", self.smiles_input.is_some())?;
            None
        };

        Ok(ResolvedConfig { experiment: e, seed, bo, testbed, diagnostic, budget, smiles_input })
    }
}

/// Recursively merges `patch` into the serialized preset, then deserializes
/// with the section's own unknown-field checks.
fn apply_overrides<T>(section: &str, preset: &T, patch: Option<&Value>) -> Result<T, CliError>
where
    T: Serialize + serde::de::DeserializeOwned,
{
    let mut base = serde_json::to_value(preset).expect("presets serialize");
    if let Some(p) = patch {
        if !p.is_object() {
            return Err(CliError::Config(format!("`{section}` must be an object")));
        }
        merge(&mut base, p);
    }
    serde_json::from_value(base).map_err(|e| CliError::Config(format!("{section}: {e}")))
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
