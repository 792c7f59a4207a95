use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xlse_core::corpus::CorpusConfig;
use xlse_core::evaluation::{EvalOptions, SAMPLED_WORDS};
use xlse_core::objectives::LossWeights;
use xlse_core::trainer::{ProviderKind, TrainConfig};

use crate::error::CliError;

/// Everything one run needs. The top-level `seed` drives corpus generation
/// and is copied into the training and evaluation seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Share of generated pairs held out as the dev set.
    pub dev_fraction: f64,
    /// Alignment file used when `train.provider = "file"`.
    pub alignments: Option<PathBuf>,
    pub export_words: usize,
    pub corpus: CorpusConfig,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            dev_fraction: 0.1,
            alignments: None,
            export_words: SAMPLED_WORDS,
            corpus: CorpusConfig::default(),
            train: TrainConfig::default(),
            eval: EvalOptions::default(),
        }
    }
}

/// Command-line values that take precedence over the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub provider: Option<ProviderKind>,
    pub threshold: Option<f64>,
    pub weights: Option<LossWeights>,
    pub lang_embedding: Option<bool>,
}

impl RunConfig {
    /// Reads `path` if given, otherwise starts from the defaults, then applies
    /// the overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = match path {
            Some(p) => {
                let text = crate::error::read_input(p)?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => RunConfig::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(p) = o.provider {
            self.train.provider = p;
        }
        if let Some(t) = o.threshold {
            self.train.threshold = t;
        }
        if let Some(w) = o.weights {
            self.train.weights = w;
        }
        if let Some(on) = o.lang_embedding {
            self.train.use_language_embedding = on;
        }
        self.train.seed = self.seed;
        self.eval.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(CliError::Config(format!("dev_fraction {} not in (0, 1)", self.dev_fraction)));
        }
        if self.export_words == 0 {
            return Err(CliError::Config("export_words must be at least 1".into()));
        }
        self.corpus.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))
    }

    /// Records the effective configuration next to a command's outputs.
    pub fn record(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::write(dir.join("config.toml"), self.to_toml()?)?;
        Ok(())
    }
}
