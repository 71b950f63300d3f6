//! Experiment configuration (TOML) and its content hash.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use teleop_core::controllers::{Method1Config, WristRoles};
use teleop_core::models::{ForestConfig, KrrConfig, NmfConfig, SvmConfig};
use teleop_core::signal::FilterConfig;
use teleop_core::synth::Protocol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub gesture_interval_s: f64,
    pub gesture_duration_s: f64,
    pub noise_std: f64,
    /// Overrides the protocol implied by the method.
    pub protocol: Option<Protocol>,
    /// Number of held-out sessions written next to the training one.
    pub n_test_sessions: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            duration_s: 120.0,
            sample_rate_hz: 200.0,
            gesture_interval_s: 30.0,
            gesture_duration_s: 2.0,
            noise_std: 0.02,
            protocol: None,
            n_test_sessions: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub krr: KrrConfig<f64>,
    pub nmf: NmfConfig,
    pub latent_dim: usize,
    pub forest: ForestConfig,
    pub svm: SvmConfig<f64>,
    /// Regressor used by the controllers: `krr`, `nmf_lr` or `ls`.
    pub regressor: String,
    /// Classifier used by the controllers: `rf` or `svm`.
    pub classifier: String,
    /// Variance fraction kept by the joint-space PCA.
    pub pca_threshold: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            krr: KrrConfig {
                max_support: Some(1000),
                ..KrrConfig::default()
            },
            nmf: NmfConfig::default(),
            latent_dim: 4,
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            regressor: "krr".into(),
            classifier: "rf".into(),
            pca_threshold: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WristSection {
    pub roles: WristRoles,
    pub threshold: f64,
}

impl Default for WristSection {
    fn default() -> Self {
        Self {
            roles: WristRoles {
                flexor: 0,
                extensor: 4,
                abductor: 2,
            },
            threshold: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// 1 hybrid, 2 PCA, 3 wrist analysis, 4 grasp type + force.
    pub method: u8,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Defaults to `<out_dir>/train.csv`.
    pub train_session: Option<PathBuf>,
    /// Defaults to `<out_dir>/test_<i>.csv`.
    pub test_sessions: Vec<PathBuf>,
    /// Built-in name or TOML path.
    pub human_map: String,
    pub robot_map: String,
    pub filter: FilterConfig<f64>,
    pub synth: SynthSection,
    pub models: ModelSection,
    pub controller: Method1Config<f64>,
    pub wrist: WristSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: 1,
            seed: 1,
            out_dir: PathBuf::from("out"),
            train_session: None,
            test_sessions: Vec::new(),
            human_map: teleop_core::maps::HUMAN15.into(),
            robot_map: teleop_core::maps::SDH7.into(),
            filter: FilterConfig::default(),
            synth: SynthSection::default(),
            models: ModelSection::default(),
            controller: Method1Config::default(),
            wrist: WristSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self =
            toml::from_str(&text).map_err(|e| teleop_core::Error::Toml(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(1..=4).contains(&self.method) {
            bail!(teleop_core::Error::InvalidConfig(format!(
                "method must be 1, 2, 3 or 4, got {}",
                self.method
            )));
        }
        if self.filter.sample_rate_hz != self.synth.sample_rate_hz {
            bail!(teleop_core::Error::InvalidConfig(format!(
                "filter.sample_rate_hz ({}) differs from synth.sample_rate_hz ({})",
                self.filter.sample_rate_hz, self.synth.sample_rate_hz
            )));
        }
        self.filter.validate()?;
        Ok(())
    }

    pub fn protocol(&self) -> Protocol {
        self.synth.protocol.unwrap_or(match self.method {
            2 => Protocol::Continuous,
            3 => Protocol::Wrist,
            4 => Protocol::GraspPoses,
            _ => Protocol::Hybrid,
        })
    }

    pub fn train_path(&self) -> PathBuf {
        self.train_session
            .clone()
            .unwrap_or_else(|| self.out_dir.join("train.csv"))
    }

    pub fn test_paths(&self) -> Vec<PathBuf> {
        if !self.test_sessions.is_empty() {
            return self.test_sessions.clone();
        }
        (1..=self.synth.n_test_sessions)
            .map(|i| self.out_dir.join(format!("test_{i}.csv")))
            .collect()
    }

    pub fn model_dir(&self) -> PathBuf {
        self.out_dir.join("models")
    }

    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        hex::encode(&digest[..8])
    }
}
