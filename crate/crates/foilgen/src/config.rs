//! The run configuration file: flat `key = value` TOML with one section per
//! pipeline stage, shared by every subcommand. Unknown keys are rejected up
//! front; command-line flags override file values; the resolved effective
//! configuration is echoed into each run's output directory.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{LabelSequence, SweepConfig};
use crate::training::{GeneratorLoss, GpSampling, Regime, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value: {0}")]
    BadValue(String),
}

/// On-disk configuration; every field optional, defaults applied at
/// resolution time.
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Master seed; every component derives its own stream from it.
    pub seed: Option<u64>,
    /// Worker threads for parallel evaluation (0 or absent = all cores).
    pub jobs: Option<usize>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub xfoil: XfoilSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub alpha_deg: Option<f64>,
    pub reynolds: Option<f64>,
    /// `panel` or `xfoil`.
    pub backend: Option<String>,
    /// `all`, or a comma-separated list of 4-digit codes.
    pub codes: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub regime: Option<String>,
    pub latent_dim: Option<usize>,
    pub learning_rate: Option<f64>,
    pub critic_steps_per_iter: Option<usize>,
    pub gp_lambda: Option<f64>,
    pub batch_size: Option<usize>,
    pub total_iterations: Option<u64>,
    pub seed: Option<u64>,
    pub checkpoint_cadence: Option<u64>,
    /// `interpolates` (default) or `real-only`.
    pub gp_sampling: Option<String>,
    /// `non-saturating` (default) or `minimax`.
    pub generator_loss: Option<String>,
    /// Console loss cadence.
    pub log_every: Option<u64>,
    /// Critic head override; must agree with the regime.
    pub critic_head: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `start:step:end`, plain decimals.
    pub labels: Option<String>,
    pub samples_per_label: Option<usize>,
    pub failure_threshold: Option<f64>,
    pub seed: Option<u64>,
    pub export_labels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct XfoilSection {
    pub executable: Option<String>,
    pub timeout_s: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(toml::from_str(&text)?)
    }

    /// Resolves the training section (with defaults) into a [`TrainConfig`].
    /// The master seed is used unless the section pins its own.
    pub fn resolve_train(&self, master_seed: u64) -> Result<TrainConfig, ConfigError> {
        let t = &self.train;
        let regime = match t.regime.as_deref() {
            None => Regime::CwganGp,
            Some(tag) => Regime::from_tag(tag)
                .ok_or_else(|| ConfigError::BadValue(format!("unknown regime {tag:?}")))?,
        };
        let mut config = TrainConfig::new(regime, t.latent_dim.unwrap_or(3));
        config.seed = t.seed.unwrap_or(master_seed);
        if let Some(v) = t.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = t.critic_steps_per_iter {
            config.critic_steps_per_iter = v;
        }
        if let Some(v) = t.gp_lambda {
            config.gp_lambda = v;
        }
        if let Some(v) = t.batch_size {
            config.batch_size = v;
        }
        if let Some(v) = t.total_iterations {
            config.total_iterations = v;
        }
        if let Some(v) = t.checkpoint_cadence {
            config.checkpoint_cadence = v;
        }
        config.gp_sampling = match t.gp_sampling.as_deref() {
            None | Some("interpolates") => GpSampling::Interpolates,
            Some("real-only") | Some("real_only") => GpSampling::RealOnly,
            Some(other) => {
                return Err(ConfigError::BadValue(format!("unknown gp_sampling {other:?}")))
            }
        };
        config.generator_loss = match t.generator_loss.as_deref() {
            None | Some("non-saturating") | Some("non_saturating") => GeneratorLoss::NonSaturating,
            Some("minimax") => GeneratorLoss::Minimax,
            Some(other) => {
                return Err(ConfigError::BadValue(format!("unknown generator_loss {other:?}")))
            }
        };
        Ok(config)
    }

    /// Resolves the sweep section (with defaults) into a [`SweepConfig`].
    pub fn resolve_sweep(&self, master_seed: u64) -> Result<SweepConfig, ConfigError> {
        let s = &self.sweep;
        let mut config = SweepConfig::default();
        config.seed = s.seed.unwrap_or(master_seed);
        if let Some(spec) = &s.labels {
            config.labels = LabelSequence::parse(spec)
                .map_err(|e| ConfigError::BadValue(e.to_string()))?;
        }
        if let Some(v) = s.samples_per_label {
            config.samples_per_label = v;
        }
        if let Some(v) = s.failure_threshold {
            config.failure_threshold = v;
        }
        if let Some(v) = &s.export_labels {
            config.export_labels = v.clone();
        }
        Ok(config)
    }
}
