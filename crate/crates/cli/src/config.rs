use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use protrans_core::detector::DetectorConfig;
use protrans_core::features::FeatureConfig;
use protrans_core::learn::{BoostConfig, TrainerConfig};
use protrans_core::relay::{ArRelayConfig, CascadeConfig, DetectorKind};
use protrans_core::txmodel::SynthesisScenario;
use protrans_core::waveform::SamplingSpec;

use crate::exit::CliError;

/// One configuration file drives every subcommand; each reads the
/// sections it needs and ignores the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-record work; `None` uses every core.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub gen: Option<GenConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub features: Option<FeaturesConfig>,
    #[serde(default)]
    pub cascade: Option<CascadeSection>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Adds autoregressive direction/zone verdicts to classify output.
    #[serde(default)]
    pub relay: Option<ArRelayConfig>,
}

fn default_sampling() -> SamplingSpec {
    SamplingSpec::new(10_000.0, 60.0).expect("valid default sampling")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    Differential,
    Swing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    #[serde(default)]
    pub family: Family,
    pub n_cycles: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    /// Random scenarios per class; mutually exclusive with `scenarios`.
    #[serde(default)]
    pub per_class: Option<usize>,
    #[serde(default)]
    pub scenarios: Option<Vec<SynthesisScenario>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Current records.
    pub corpus: PathBuf,
    /// Voltage records aligned with `corpus`; required by the swing pipeline.
    #[serde(default)]
    pub voltage: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturesConfig {
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub detector_kind: DetectorKind,
    pub set: FeatureConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Differential,
    ThreeStage,
    Swing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeSection {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub trainer: Option<TrainerConfig>,
    #[serde(default)]
    pub cv_folds: Option<usize>,
    /// Full cascade layout; mutually exclusive with `preset`.
    #[serde(default)]
    pub config: Option<CascadeConfig>,
}

impl CascadeSection {
    pub fn resolve(&self, seed: u64) -> Result<CascadeConfig, CliError> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(_), Some(_)) => return Err(CliError::config("cascade: give either preset or config, not both")),
            (None, None) => return Err(CliError::config("cascade: preset or config is required")),
            (None, Some(c)) => {
                if self.trainer.is_some() {
                    return Err(CliError::config("cascade: trainer belongs inside config when config is given"));
                }
                c.clone()
            }
            (Some(p), None) => {
                let trainer = self
                    .trainer
                    .clone()
                    .unwrap_or_else(|| TrainerConfig::Boosted(BoostConfig::default()));
                match p {
                    Preset::Differential => CascadeConfig::differential(trainer),
                    Preset::ThreeStage => CascadeConfig::three_stage(trainer),
                    Preset::Swing => CascadeConfig::swing(trainer),
                }
            }
        };
        if let Some(k) = self.cv_folds {
            cfg.cv_folds = k;
        }
        cfg.seed = seed;
        cfg.validate().map_err(CliError::config)?;
        Ok(cfg)
    }
}

/// Parsed configuration plus the hash of its effective JSON form.
pub struct Loaded {
    pub config: RunConfig,
    pub sha256: String,
}

/// Sets `path` (dot-separated object keys) in `root` to `value`, creating
/// intermediate objects.
pub fn set_leaf(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("override path {path:?} has an empty key")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("override {path:?}: {key:?} is not inside an object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::config(format!("override {path:?}: parent is not an object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Parses `raw`, applies leaf overrides and validates the result.
pub fn load(raw: Value, overrides: &[(String, Value)]) -> Result<Loaded, CliError> {
    let mut raw = raw;
    if !raw.is_object() {
        return Err(CliError::config("configuration must be a JSON object"));
    }
    for (path, value) in overrides {
        set_leaf(&mut raw, path, value.clone())?;
    }
    let config: RunConfig = serde_json::from_value(raw.clone()).map_err(|e| CliError::config(format!("configuration: {e}")))?;
    validate(&config)?;
    // serde_json maps are key-sorted, so this text is canonical
    let canonical = serde_json::to_string(&raw).expect("values serialize");
    let sha256 = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(Loaded { config, sha256 })
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.jobs == Some(0) {
        return Err(CliError::config("jobs must be at least 1"));
    }
    if let Some(g) = &c.gen {
        match (&g.per_class, &g.scenarios) {
            (Some(_), Some(_)) => return Err(CliError::config("gen: give either per_class or scenarios, not both")),
            (None, None) => return Err(CliError::config("gen: per_class or scenarios is required")),
            _ => {}
        }
        if let Some(snr) = g.snr_db {
            if !snr.is_finite() {
                return Err(CliError::config("gen: snr_db must be finite"));
            }
        }
    }
    if let Some(f) = &c.features {
        f.detector.validate().map_err(CliError::config)?;
        f.set.validate().map_err(CliError::config)?;
    }
    if let Some(r) = &c.relay {
        r.validate().map_err(CliError::config)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_change_the_hash() {
        let raw = json!({"seed": 1});
        let a = load(raw.clone(), &[]).unwrap();
        let b = load(raw.clone(), &[("seed".into(), json!(2))]).unwrap();
        assert_eq!(b.config.seed, 2);
        assert_ne!(a.sha256, b.sha256);
        assert_eq!(a.sha256, load(raw, &[]).unwrap().sha256);
    }

    #[test]
    fn nested_override_creates_objects() {
        let mut v = json!({});
        set_leaf(&mut v, "gen.n_cycles", json!(6)).unwrap();
        assert_eq!(v, json!({"gen": {"n_cycles": 6}}));
        let mut scalar = json!({"gen": 3});
        assert!(set_leaf(&mut scalar, "gen.n_cycles", json!(6)).is_err());
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = load(json!({"sede": 1}), &[]).err().unwrap();
        assert_eq!(err.code, 2);
    }

    #[test]
    fn cascade_needs_exactly_one_source() {
        let s = CascadeSection {
            preset: None,
            trainer: None,
            cv_folds: None,
            config: None,
        };
        assert!(s.resolve(0).is_err());
        let s = CascadeSection {
            preset: Some(Preset::ThreeStage),
            ..s
        };
        let cfg = s.resolve(7).unwrap();
        assert_eq!((cfg.stages.len(), cfg.seed), (3, 7));
    }
}
