//! One TOML file with a section per stage.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineConfig;
use crate::eval::RelevanceMode;
use crate::extract::ExtractConfig;
use crate::model::{ModelConfig, TrainConfig, Variant};
use crate::split::SplitConfig;
use crate::synth::SynthConfig;
use crate::text::TextConfig;
use crate::{Error, Result};

/// Which significance the neural rankers receive as input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceSource {
    /// As computed during extraction.
    Extracted,
    Table,
    Dataset,
    #[default]
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub relevance: RelevanceMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ks: vec![1, 3, 5],
            relevance: RelevanceMode::GoldTopK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub variants: Vec<Variant>,
    pub significance_source: SignificanceSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variants: Variant::ALL.to_vec(),
            significance_source: SignificanceSource::Cluster,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Seeds model initialization; `with_seed` also overrides every section seed.
    pub seed: u64,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub extract: ExtractConfig,
    pub text: TextConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub baselines: BaselineConfig,
    pub pipeline: PipelineConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.synth.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
        self.baselines.kmeans.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.model.validate()?;
        if self.eval.ks.is_empty() || self.eval.ks.contains(&0) {
            return Err(Error::Config("eval.ks must be non-empty and positive".into()));
        }
        if self.pipeline.variants.is_empty() {
            return Err(Error::Config("pipeline.variants must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.extract.threshold) {
            return Err(Error::Config("extract.threshold must lie in [0, 1]".into()));
        }
        if self.baselines.kmeans.k == 0 {
            return Err(Error::Config("baselines.kmeans.k must be positive".into()));
        }
        if self.train.select_k == 0 {
            return Err(Error::Config("train.select_k must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip() {
        let c = Config::default().with_seed(9);
        assert_eq!(Config::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml_str("[model]\nwidth = 3\n").is_err());
        assert!(Config::from_toml_str("[eval]\nks = []\n").is_err());
    }
}
