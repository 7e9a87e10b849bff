//! Encoder dimensions, parameter storage and initialization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::attention::MultiHeadParams;
use super::tensor::Matrix;
use crate::error::{Error, Result};

/// Standard deviation of the Gaussian used for weight initialization.
pub const INIT_STD: f64 = 0.02;

/// Encoder dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
    pub num_labels: usize,
}

impl ModelConfig {
    /// Two layers, two heads, width 16: small enough to gradient-check.
    pub fn desk(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            d_model: 16,
            heads: 2,
            layers: 2,
            d_ff: 64,
            max_seq_len: 128,
            num_labels: 2,
        }
    }

    /// The full BERT-base shape: 12 layers, 12 heads, width 768.
    pub fn paper(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            d_model: 768,
            heads: 12,
            layers: 12,
            d_ff: 3072,
            max_seq_len: 128,
            num_labels: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= crate::tokenizer::NUM_SPECIALS {
            return Err(Error::config(
                "vocab_size must exceed the special-token count",
            ));
        }
        if self.d_model == 0 || !self.d_model.is_multiple_of(2) {
            return Err(Error::config("d_model must be a positive even number"));
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::config(format!(
                "d_model {} is not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        if self.layers == 0 || self.d_ff == 0 {
            return Err(Error::config("layers and d_ff must be positive"));
        }
        if self.max_seq_len < 2 {
            return Err(Error::config("max_seq_len must leave room for CLS and SEP"));
        }
        if self.num_labels < 2 {
            return Err(Error::config("num_labels must be at least 2"));
        }
        Ok(())
    }
}

/// One post-norm encoder block.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub attn: MultiHeadParams,
    pub ln1_gamma: Matrix,
    pub ln1_beta: Matrix,
    pub w_ff1: Matrix,
    pub b_ff1: Matrix,
    pub w_ff2: Matrix,
    pub b_ff2: Matrix,
    pub ln2_gamma: Matrix,
    pub ln2_beta: Matrix,
}

/// Every trainable tensor of the encoder and its two heads.
///
/// The MLM head is `LayerNorm(GELU(h W + b)) Eᵀ + b_out` where `E` is the
/// token embedding table itself.  The classifier reads the hidden state at
/// the CLS position.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: ModelConfig,
    pub token_embeddings: Matrix,
    pub layers: Vec<LayerParams>,
    pub w_mlm: Matrix,
    pub b_mlm: Matrix,
    pub mlm_ln_gamma: Matrix,
    pub mlm_ln_beta: Matrix,
    pub b_mlm_out: Matrix,
    pub w_cls: Matrix,
    pub b_cls: Matrix,
}

macro_rules! named_tensors {
    ($params:expr, $iter:ident, $($r:tt)+) => {{
        let p = $params;
        let mut out = Vec::new();
        out.push(("embeddings.token".to_string(), $($r)+ p.token_embeddings));
        for (l, layer) in p.layers.$iter().enumerate() {
            for (i, head) in layer.attn.heads.$iter().enumerate() {
                out.push((format!("layer{l}.attn.head{i}.w_q"), $($r)+ head.w_q));
                out.push((format!("layer{l}.attn.head{i}.b_q"), $($r)+ head.b_q));
                out.push((format!("layer{l}.attn.head{i}.w_k"), $($r)+ head.w_k));
                out.push((format!("layer{l}.attn.head{i}.b_k"), $($r)+ head.b_k));
                out.push((format!("layer{l}.attn.head{i}.w_v"), $($r)+ head.w_v));
                out.push((format!("layer{l}.attn.head{i}.b_v"), $($r)+ head.b_v));
            }
            out.push((format!("layer{l}.attn.w_o"), $($r)+ layer.attn.w_o));
            out.push((format!("layer{l}.attn.b_o"), $($r)+ layer.attn.b_o));
            out.push((format!("layer{l}.ln1.gamma"), $($r)+ layer.ln1_gamma));
            out.push((format!("layer{l}.ln1.beta"), $($r)+ layer.ln1_beta));
            out.push((format!("layer{l}.ff.w_1"), $($r)+ layer.w_ff1));
            out.push((format!("layer{l}.ff.b_1"), $($r)+ layer.b_ff1));
            out.push((format!("layer{l}.ff.w_2"), $($r)+ layer.w_ff2));
            out.push((format!("layer{l}.ff.b_2"), $($r)+ layer.b_ff2));
            out.push((format!("layer{l}.ln2.gamma"), $($r)+ layer.ln2_gamma));
            out.push((format!("layer{l}.ln2.beta"), $($r)+ layer.ln2_beta));
        }
        out.push(("mlm.w_dense".to_string(), $($r)+ p.w_mlm));
        out.push(("mlm.b_dense".to_string(), $($r)+ p.b_mlm));
        out.push(("mlm.ln.gamma".to_string(), $($r)+ p.mlm_ln_gamma));
        out.push(("mlm.ln.beta".to_string(), $($r)+ p.mlm_ln_beta));
        out.push(("mlm.b_out".to_string(), $($r)+ p.b_mlm_out));
        out.push(("cls.w".to_string(), $($r)+ p.w_cls));
        out.push(("cls.b".to_string(), $($r)+ p.b_cls));
        out
    }};
}

/// Whether a named tensor receives decoupled weight decay: weight matrices
/// do, biases and layer-norm scales/shifts do not.
pub fn decays(name: &str) -> bool {
    let last = name.rsplit('.').next().unwrap_or(name);
    !(last.starts_with("b_") || last == "b" || last == "gamma" || last == "beta")
}

impl EncoderParams {
    /// All-zero tensors with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        let layer = LayerParams {
            attn: MultiHeadParams::zeros(d, config.heads)?,
            ln1_gamma: Matrix::zeros(1, d),
            ln1_beta: Matrix::zeros(1, d),
            w_ff1: Matrix::zeros(d, config.d_ff),
            b_ff1: Matrix::zeros(1, config.d_ff),
            w_ff2: Matrix::zeros(config.d_ff, d),
            b_ff2: Matrix::zeros(1, d),
            ln2_gamma: Matrix::zeros(1, d),
            ln2_beta: Matrix::zeros(1, d),
        };
        Ok(Self {
            config: config.clone(),
            token_embeddings: Matrix::zeros(config.vocab_size, d),
            layers: vec![layer; config.layers],
            w_mlm: Matrix::zeros(d, d),
            b_mlm: Matrix::zeros(1, d),
            mlm_ln_gamma: Matrix::zeros(1, d),
            mlm_ln_beta: Matrix::zeros(1, d),
            b_mlm_out: Matrix::zeros(1, config.vocab_size),
            w_cls: Matrix::zeros(d, config.num_labels),
            b_cls: Matrix::zeros(1, config.num_labels),
        })
    }

    /// Weights drawn from `N(0, 0.02²)`, biases zero, layer-norm scales one.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid standard deviation");
        for (name, tensor) in params.tensors_mut() {
            init_tensor(&name, tensor, &normal, &mut rng);
        }
        Ok(params)
    }

    /// Replaces the classifier with a freshly initialized `num_labels`-way head.
    pub fn reset_classifier(&mut self, num_labels: usize, seed: u64) -> Result<()> {
        let mut config = self.config.clone();
        config.num_labels = num_labels;
        config.validate()?;
        self.config = config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid standard deviation");
        self.w_cls = Matrix::zeros(self.config.d_model, num_labels);
        self.b_cls = Matrix::zeros(1, num_labels);
        init_tensor("cls.w", &mut self.w_cls, &normal, &mut rng);
        Ok(())
    }

    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        named_tensors!(self, iter, &)
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        named_tensors!(self, iter_mut, &mut)
    }

    /// Same shapes, all zeros: the layout used for gradients and moments.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, t) in out.tensors_mut() {
            t.fill(0.0);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }
}

fn init_tensor(name: &str, tensor: &mut Matrix, normal: &Normal<f64>, rng: &mut ChaCha8Rng) {
    let last = name.rsplit('.').next().unwrap_or(name);
    if last == "gamma" {
        tensor.fill(1.0);
    } else if decays(name) {
        for x in tensor.data_mut() {
            *x = normal.sample(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_cover_every_tensor() {
        let params = EncoderParams::init(&ModelConfig::desk(50), 1).unwrap();
        let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        // 1 embedding + 2 × (2 heads × 6 + 10) + 5 MLM + 2 classifier
        assert_eq!(names.len(), 1 + 2 * 22 + 7);
    }

    #[test]
    fn initialization_follows_the_conventions() {
        let params = EncoderParams::init(&ModelConfig::desk(50), 1).unwrap();
        for (name, t) in params.tensors() {
            if name.ends_with("gamma") {
                assert!(t.data().iter().all(|&x| x == 1.0), "{name}");
            } else if !decays(&name) {
                assert!(t.data().iter().all(|&x| x == 0.0), "{name}");
            }
        }
        let e = params.token_embeddings.data();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let sd = (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / e.len() as f64).sqrt();
        assert!(
            mean.abs() < 0.005 && (sd - INIT_STD).abs() < 0.005,
            "mean {mean} sd {sd}"
        );
        assert_eq!(
            params,
            EncoderParams::init(&ModelConfig::desk(50), 1).unwrap()
        );
        assert_ne!(
            params,
            EncoderParams::init(&ModelConfig::desk(50), 2).unwrap()
        );
    }

    #[test]
    fn decay_excludes_biases_and_norms() {
        assert!(decays("embeddings.token"));
        assert!(decays("layer0.attn.head1.w_q"));
        assert!(decays("cls.w"));
        assert!(!decays("layer0.attn.head1.b_q"));
        assert!(!decays("layer1.ln2.gamma"));
        assert!(!decays("mlm.ln.beta"));
        assert!(!decays("mlm.b_out"));
        assert!(!decays("cls.b"));
    }

    #[test]
    fn paper_preset_has_the_published_shape() {
        let cfg = ModelConfig::paper(75_000);
        assert_eq!((cfg.layers, cfg.heads, cfg.d_model), (12, 12, 768));
        cfg.validate().unwrap();
        let mut bad = ModelConfig::desk(50);
        bad.heads = 3;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
