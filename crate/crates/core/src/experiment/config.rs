use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::baselines::GbdtParams;
use crate::dataset::SynthSpec;
use crate::llm::{LlmParams, MockSpec};
use crate::prompting::DEFAULT_BATCH_SIZE;
use crate::util::sha256_hex;

/// Where the survey comes from. A `path` wins over `synthetic`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub marginals: Option<PathBuf>,
    pub synthetic: SynthSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            schema: None,
            marginals: None,
            synthetic: SynthSpec {
                n: 874,
                seed: 1,
                label_rule: "linear".into(),
                noise_sd: 0.3,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub support_sizes: Vec<usize>,
    pub repeats: usize,
    /// Share of records in the training pool; the rest are queries.
    pub train_fraction: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Draw a fresh train/query split for every repeat instead of one per sweep.
    pub vary_split: bool,
    /// Training fractions for the baseline sweep.
    pub fractions: Vec<f64>,
    /// Support size of the few-shot arm in the importance study.
    pub importance_support: usize,
    /// Extra attempts, with a new trial index, after an unparseable response.
    pub parse_retries: u32,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            support_sizes: (0..=18).step_by(3).collect(),
            repeats: 3,
            train_fraction: 0.8,
            seed: 42,
            batch_size: DEFAULT_BATCH_SIZE,
            vary_split: false,
            fractions: (1..=9).map(|i| i as f64 / 10.0).collect(),
            importance_support: 6,
            parse_retries: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("results"),
            cache_dir: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub protocol: ProtocolConfig,
    pub llm: LlmParams,
    /// When present, the scripted mock answers instead of the HTTP endpoint.
    pub mock: Option<MockSpec>,
    pub gbdt: GbdtParams,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let p = &self.protocol;
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if p.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if p.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return bad("train_fraction must lie strictly between 0 and 1");
        }
        if p.support_sizes.is_empty() {
            return bad("support_sizes is empty");
        }
        if p.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return bad("fractions must lie strictly between 0 and 1");
        }
        self.llm.validate()?;
        Ok(())
    }

    /// Digest of everything that affects results. Output and cache
    /// locations are left out so moving them does not change it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
    }
}
