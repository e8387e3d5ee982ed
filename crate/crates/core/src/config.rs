//! Toolchain configuration: one TOML file with a section per pipeline stage.
//! Every field has a default, so an empty file is a valid configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricWeights;
use crate::qa::{GenerationParams, Subtask};
use crate::tracks::MotionThresholds;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file")]
    Io(#[from] std::io::Error),
    #[error("config is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Raw JSONL annotation stream consumed by ingest.
    pub annotations: PathBuf,
    pub vocab: PathBuf,
    /// Template registry file; the built-in registry is used when absent.
    pub templates: Option<PathBuf>,
    /// Directory all pipeline outputs land in.
    pub output: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            annotations: PathBuf::from("annotations.jsonl"),
            vocab: PathBuf::from("vocab.toml"),
            templates: None,
            output: PathBuf::from("out"),
        }
    }
}

/// Interprets a configured path relative to the config file's directory.
pub fn resolve_path(config_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_dir.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Dense grid rate labels are broadcast onto, frames per second.
    pub target_fps: f64,
    /// Labels reach grid frames within this distance of their frame, seconds.
    pub half_window_s: f64,
    pub min_clip_s: f64,
    pub max_clip_s: f64,
    /// Ingest fails when the rejected fraction exceeds this.
    pub max_reject_rate: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            target_fps: 5.0,
            half_window_s: 0.5,
            min_clip_s: 20.0,
            max_clip_s: 30.0,
            max_reject_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    /// Greedy association gate between consecutive centroids, unit distance.
    pub assoc_gate: f64,
    /// Spatial continuity bound between consecutive samples, unit distance.
    pub spatial_delta: f64,
    pub thresholds: MotionThresholds,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            assoc_gate: 0.3,
            spatial_delta: 0.3 * std::f64::consts::SQRT_2,
            thresholds: MotionThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub master_seed: u64,
    /// Per-clip candidate cap for subtasks without an explicit quota.
    pub default_quota: usize,
    /// Explicit per-subtask quotas, keyed by subtask id.
    pub quotas: BTreeMap<String, usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self { master_seed: 0, default_quota: 20, quotas: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub tracking: TrackingConfig,
    pub generation: GenerationConfig,
    pub metrics: MetricWeights,
}

fn subtask_from_id(id: &str) -> Option<Subtask> {
    Subtask::ALL.into_iter().find(|s| s.id() == id)
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(s)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        let i = &self.ingest;
        if !(i.target_fps > 0.0) {
            return err("ingest.target_fps must be positive".into());
        }
        if !(i.half_window_s >= 0.0) {
            return err("ingest.half_window_s must be non-negative".into());
        }
        if !(i.min_clip_s > 0.0 && i.max_clip_s >= i.min_clip_s) {
            return err("ingest clip lengths need 0 < min_clip_s <= max_clip_s".into());
        }
        if !(0.0..=1.0).contains(&i.max_reject_rate) {
            return err("ingest.max_reject_rate must be in [0, 1]".into());
        }
        let t = &self.tracking;
        if !(t.assoc_gate > 0.0) {
            return err("tracking.assoc_gate must be positive".into());
        }
        if !(t.spatial_delta > 0.0) {
            return err("tracking.spatial_delta must be positive".into());
        }
        if !(0.0 <= t.thresholds.stationary_below
            && t.thresholds.stationary_below <= t.thresholds.active_from)
        {
            return err("tracking.thresholds must satisfy stationary_below <= active_from".into());
        }
        let g = &self.generation;
        if g.default_quota == 0 || g.default_quota > 999 {
            return err("generation.default_quota must be in [1, 999]".into());
        }
        for (id, quota) in &g.quotas {
            if subtask_from_id(id).is_none() {
                return err(format!("generation.quotas: unknown subtask {id:?}"));
            }
            if *quota > 999 {
                return err(format!("generation.quotas.{id} must be at most 999"));
            }
        }
        let w = &self.metrics;
        for (name, pair) in [
            ("velocity", w.velocity_numeric + w.velocity_categorical),
            ("comparison", w.comparison_verdict + w.comparison_pairs),
            ("cot", w.cot_conclusion + w.cot_stages),
        ] {
            if (pair - 1.0).abs() > 1e-9 {
                return err(format!("metrics: {name} weights must sum to 1"));
            }
        }
        let all_weights = [
            w.velocity_numeric,
            w.velocity_categorical,
            w.comparison_verdict,
            w.comparison_pairs,
            w.cot_conclusion,
            w.cot_stages,
        ];
        if all_weights.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return err("metrics: weights must be in [0, 1]".into());
        }
        Ok(())
    }

    pub fn generation_params(&self) -> GenerationParams {
        let quotas = self
            .generation
            .quotas
            .iter()
            .map(|(id, q)| (subtask_from_id(id).expect("validated subtask id"), *q))
            .collect();
        GenerationParams {
            master_seed: self.generation.master_seed,
            default_quota: self.generation.default_quota,
            quotas,
            thresholds: self.tracking.thresholds,
            delta: self.tracking.spatial_delta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c = Config::from_toml_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.ingest.max_clip_s, 30.0);
        assert_eq!(c.generation.default_quota, 20);
        assert_eq!(c.metrics.cot_conclusion, 0.7);
    }

    #[test]
    fn sections_override_defaults() {
        let c = Config::from_toml_str(
            r#"
[ingest]
target_fps = 25.0
max_reject_rate = 0.05

[generation]
master_seed = 42
[generation.quotas]
locate = 7

[tracking]
assoc_gate = 0.5
"#,
        )
        .unwrap();
        assert_eq!(c.ingest.target_fps, 25.0);
        assert_eq!(c.generation.quotas["locate"], 7);
        let p = c.generation_params();
        assert_eq!(p.master_seed, 42);
        assert_eq!(p.quota_for(Subtask::Locate), 7);
        assert_eq!(p.quota_for(Subtask::Velocity), 20);
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(Config::from_toml_str("[ingest]\ntarget_fps = 0.0").is_err());
        assert!(Config::from_toml_str("[generation.quotas]\nnope = 5").is_err());
        assert!(Config::from_toml_str("[generation]\ndefault_quota = 1000").is_err());
        assert!(Config::from_toml_str("[metrics]\nvelocity_numeric = 0.9").is_err());
        assert!(Config::from_toml_str("[ingest]\nunknown_field = 1").is_err());
    }
}
