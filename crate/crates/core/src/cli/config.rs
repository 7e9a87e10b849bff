//! The TOML run configuration.
//!
//! Every section is optional; missing keys take their documented defaults.
//! Command-line flags override values read from the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clean::CleanConfig;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::model::{ModelConfig, TrainingConfig};
use crate::tokenizer::TrainerConfig;

/// Default seed of every seeded stage.
pub const DEFAULT_SEED: u64 = 42;

/// Input and output locations of the `pipeline` command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Tweet records, one JSON object per line.
    pub tweets: Option<PathBuf>,
    /// Directory of forum pages (`*.html`).
    pub forum_dir: Option<PathBuf>,
    /// Directory receiving every stage output.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoFilterConfig {
    /// Location term list; the bundled list when absent.
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    /// Digest partitions; any value gives the same survivors.
    pub shards: usize,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { shards: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    /// Bernoulli keep probability; the pipeline skips sampling when absent.
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// 2 layers, 2 heads, width 16, feed-forward 64.
    #[default]
    Desk,
    /// 12 layers, 12 heads, width 768, feed-forward 3072.
    Paper,
}

/// Encoder shape: a preset with optional per-dimension overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Preset,
    pub layers: Option<usize>,
    pub heads: Option<usize>,
    pub d_model: Option<usize>,
    pub d_ff: Option<usize>,
}

impl ModelSection {
    pub fn resolve(&self, vocab_size: usize, max_seq_len: usize) -> Result<ModelConfig> {
        let mut cfg = match self.preset {
            Preset::Desk => ModelConfig::desk(vocab_size),
            Preset::Paper => ModelConfig::paper(vocab_size),
        };
        if let Some(v) = self.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.heads {
            cfg.heads = v;
        }
        if let Some(v) = self.d_model {
            cfg.d_model = v;
        }
        if let Some(v) = self.d_ff {
            cfg.d_ff = v;
        }
        cfg.max_seq_len = max_seq_len;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub geo_filter: GeoFilterConfig,
    pub clean: CleanConfig,
    pub dedup: DedupConfig,
    pub sample: SampleConfig,
    pub tokenizer: TrainerConfig,
    pub model: ModelSection,
    pub pretrain: TrainingConfig,
    pub finetune: TrainingConfig,
    pub eval: EvalSection,
}

/// Evaluation protocol settings; fine-tuning settings live in `[finetune]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub repeats: usize,
    pub stratified: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            repeats: 3,
            stratified: false,
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            paths: PathsConfig::default(),
            geo_filter: GeoFilterConfig::default(),
            clean: CleanConfig::default(),
            dedup: DedupConfig::default(),
            sample: SampleConfig::default(),
            tokenizer: TrainerConfig::default(),
            model: ModelSection::default(),
            pretrain: TrainingConfig::default(),
            finetune: TrainingConfig {
                batch_size: 64,
                ..TrainingConfig::default()
            },
            eval: EvalSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid configuration: {e}")))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        rebase(&mut cfg.paths.tweets);
        rebase(&mut cfg.paths.forum_dir);
        rebase(&mut cfg.paths.output_dir);
        rebase(&mut cfg.geo_filter.terms);
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Pretraining settings with the global seed applied.
    pub fn pretrain_config(&self) -> TrainingConfig {
        TrainingConfig {
            seed: self.seed,
            ..self.pretrain.clone()
        }
    }

    /// Evaluation settings with the global seed applied.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            repeats: self.eval.repeats,
            split_seed: self.seed,
            stratified: self.eval.stratified,
            finetune: TrainingConfig {
                seed: self.seed,
                ..self.finetune.clone()
            },
        }
    }
}
