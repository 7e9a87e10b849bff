//! MLM corruption, batched loss and gradients, AdamW, pretraining and
//! fine-tuning.
//!
//! Every random draw is seeded from `(seed, purpose, step, index)`, so a
//! run resumed from a checkpoint replays exactly the batches and masks an
//! uninterrupted run would have seen.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::encoder::{
    classifier_backward, classifier_logits, encoder_backward, forward_cached, mlm_head_backward,
};
use super::params::{decays, EncoderParams, ModelConfig};
use crate::error::{Error, Result};
use crate::tokenizer::{SubwordVocab, CLS, MASK, NUM_SPECIALS, SEP};

/// Optimisation and masking settings shared by pretraining and fine-tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Share of maskable positions selected for prediction.
    pub mask_fraction: f64,
    /// Of the selected positions, the share replaced by `[MASK]`.
    pub mask_token_prob: f64,
    /// Of the selected positions, the share replaced by a random piece.
    pub random_token_prob: f64,
    pub max_seq_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// Total optimizer steps of a pretraining run.
    pub steps: u64,
    /// Passes over the training set when fine-tuning.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    /// Desk-scale defaults: the published optimizer and masking settings
    /// with a batch of 8.
    fn default() -> Self {
        Self {
            mask_fraction: 0.15,
            mask_token_prob: 0.8,
            random_token_prob: 0.1,
            max_seq_len: 128,
            batch_size: 8,
            learning_rate: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            steps: 1000,
            epochs: 3,
            seed: 42,
        }
    }
}

impl TrainingConfig {
    /// The published pretraining batch of 256.
    pub fn paper() -> Self {
        Self {
            batch_size: 256,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mask_fraction > 0.0 && self.mask_fraction <= 1.0) {
            return Err(Error::config("mask_fraction must be in (0, 1]"));
        }
        let probs = [self.mask_token_prob, self.random_token_prob];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.iter().sum::<f64>() > 1.0 + 1e-12
        {
            return Err(Error::config(
                "mask_token_prob and random_token_prob must be probabilities summing to at most 1",
            ));
        }
        if self.max_seq_len < 2 {
            return Err(Error::config("max_seq_len must leave room for CLS and SEP"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                "learning_rate must be finite and non-negative",
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("betas must be in [0, 1)"));
        }
        if self.epsilon.is_nan()
            || self.epsilon <= 0.0
            || self.weight_decay.is_nan()
            || self.weight_decay < 0.0
        {
            return Err(Error::config(
                "epsilon must be positive and weight_decay non-negative",
            ));
        }
        Ok(())
    }
}

/// Mixes a seed with a purpose tag and counters into a fresh stream seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts
        .iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

const TAG_MASK: u64 = 1;
const TAG_EPOCH: u64 = 2;
const TAG_HEAD: u64 = 3;

/// A sequence with MLM targets at the corrupted positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MlmExample {
    pub input: Vec<u32>,
    pub labels: Vec<Option<u32>>,
}

/// A CLS/SEP-wrapped sequence with its class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExample {
    pub ids: Vec<u32>,
    pub label: usize,
}

/// One optimisation batch.  The loss is the mean MLM cross-entropy over
/// all labeled positions plus the mean classification cross-entropy over
/// the classification examples; either part may be empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub mlm: Vec<MlmExample>,
    pub classify: Vec<ClassExample>,
}

/// Selects `⌈mask_fraction × maskable⌉` non-special positions and corrupts
/// them; returns `None` (with a warning) when nothing can be masked.
pub fn mlm_corrupt(
    token_ids: &[u32],
    cfg: &TrainingConfig,
    seed: u64,
    vocab_size: usize,
) -> Option<MlmExample> {
    let maskable: Vec<usize> = (0..token_ids.len())
        .filter(|&p| token_ids[p] as usize >= NUM_SPECIALS)
        .collect();
    if maskable.is_empty() {
        log::warn!("sequence has no maskable positions; skipped");
        return None;
    }
    let count =
        ((cfg.mask_fraction * maskable.len() as f64).ceil() as usize).clamp(1, maskable.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, maskable.len(), count);
    let mut input = token_ids.to_vec();
    let mut labels = vec![None; token_ids.len()];
    for i in chosen.iter() {
        let p = maskable[i];
        labels[p] = Some(token_ids[p]);
        let u: f64 = rng.gen();
        if u < cfg.mask_token_prob {
            input[p] = MASK;
        } else if u < cfg.mask_token_prob + cfg.random_token_prob && vocab_size > NUM_SPECIALS {
            input[p] = rng.gen_range(NUM_SPECIALS as u32..vocab_size as u32);
        }
    }
    Some(MlmExample { input, labels })
}

/// `[CLS] ids [SEP]`, with `ids` cut to fit `max_seq_len`.
pub fn wrap_sequence(ids: &[u32], max_seq_len: usize) -> Vec<u32> {
    let body = max_seq_len.saturating_sub(2).min(ids.len());
    let mut out = Vec::with_capacity(body + 2);
    out.push(CLS);
    out.extend_from_slice(&ids[..body]);
    out.push(SEP);
    out
}

/// Splits documents into windows of at most `max_seq_len − 2` pieces and
/// wraps each with CLS/SEP.  Empty documents produce no window.
pub fn make_windows(docs: &[Vec<u32>], max_seq_len: usize) -> Vec<Vec<u32>> {
    let body = max_seq_len.saturating_sub(2).max(1);
    docs.iter()
        .flat_map(|doc| doc.chunks(body).map(|c| wrap_sequence(c, max_seq_len)))
        .collect()
}

/// Batch loss and its gradient with respect to every parameter.
///
/// Sequences are processed one after another and their gradients summed in
/// batch order, so the result does not depend on any thread pool.
pub fn loss_and_gradients(params: &EncoderParams, batch: &Batch) -> Result<(f64, EncoderParams)> {
    if batch.mlm.is_empty() && batch.classify.is_empty() {
        return Err(Error::validation("batch is empty"));
    }
    let max_len = params.config.max_seq_len;
    let total_labels: usize = batch
        .mlm
        .iter()
        .map(|ex| {
            ex.labels
                .iter()
                .take(max_len)
                .filter(|l| l.is_some())
                .count()
        })
        .sum();
    if !batch.mlm.is_empty() && total_labels == 0 {
        return Err(Error::validation("MLM batch has no labeled positions"));
    }
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    if total_labels > 0 {
        let scale = 1.0 / total_labels as f64;
        for ex in &batch.mlm {
            if ex.labels.len() != ex.input.len() {
                return Err(Error::validation("MLM labels and input differ in length"));
            }
            let (hidden, cache) = forward_cached(&ex.input, params)?;
            let (sum, d_hidden) =
                mlm_head_backward(&hidden, &ex.labels, params, scale, &mut grads)?;
            encoder_backward(params, &cache, d_hidden, &mut grads);
            loss += sum * scale;
        }
    }
    if !batch.classify.is_empty() {
        let scale = 1.0 / batch.classify.len() as f64;
        for ex in &batch.classify {
            if ex.label >= params.config.num_labels {
                return Err(Error::validation(format!(
                    "label {} is outside {} classes",
                    ex.label, params.config.num_labels
                )));
            }
            let (hidden, cache) = forward_cached(&ex.ids, params)?;
            let (sum, d_hidden) =
                classifier_backward(&hidden, ex.label, params, scale, &mut grads)?;
            encoder_backward(params, &cache, d_hidden, &mut grads);
            loss += sum * scale;
        }
    }
    Ok((loss, grads))
}

/// AdamW with bias correction and decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub m: EncoderParams,
    pub v: EncoderParams,
    pub t: u64,
}

impl AdamW {
    pub fn new(params: &EncoderParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(
        &mut self,
        params: &mut EncoderParams,
        grads: &EncoderParams,
        cfg: &TrainingConfig,
    ) {
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let lr = cfg.learning_rate;
        let g_all = grads.tensors();
        let m_all = self.m.tensors_mut();
        let v_all = self.v.tensors_mut();
        for ((((name, p), (_, g)), (_, m)), (_, v)) in params
            .tensors_mut()
            .into_iter()
            .zip(g_all)
            .zip(m_all)
            .zip(v_all)
        {
            let decay = if decays(&name) {
                1.0 - lr * cfg.weight_decay
            } else {
                1.0
            };
            let iter = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut());
            for (((p, &g), m), v) in iter {
                *p *= decay;
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Parameters, optimizer moments and the number of completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: EncoderParams,
    pub optimizer: AdamW,
    pub step: u64,
}

impl TrainState {
    pub fn new(params: EncoderParams) -> Self {
        let optimizer = AdamW::new(&params);
        Self {
            params,
            optimizer,
            step: 0,
        }
    }
}

/// One forward/backward pass and AdamW update; returns the batch loss.
pub fn train_step(state: &mut TrainState, batch: &Batch, cfg: &TrainingConfig) -> Result<f64> {
    let (loss, grads) = loss_and_gradients(&state.params, batch)?;
    if !loss.is_finite() {
        return Err(Error::validation(format!(
            "non-finite loss {loss} at step {}",
            state.step
        )));
    }
    state.optimizer.step(&mut state.params, &grads, cfg);
    state.step += 1;
    Ok(loss)
}

/// A seeded permutation of `0..n` for one epoch.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[TAG_EPOCH, epoch]));
    order.shuffle(&mut rng);
    order
}

/// Result of a pretraining run: the checkpoint and one loss per step taken.
#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub checkpoint: Checkpoint,
    pub losses: Vec<f64>,
}

fn check_corpus(docs: &[Vec<u32>], vocab_size: usize) -> Result<()> {
    for (i, doc) in docs.iter().enumerate() {
        if let Some(&bad) = doc.iter().find(|&&id| id as usize >= vocab_size) {
            return Err(Error::config(format!(
                "document {i} contains id {bad}, outside the vocabulary of {vocab_size}: corpus and vocabulary do not match"
            )));
        }
    }
    Ok(())
}

/// Trains the encoder with the MLM objective until `cfg.steps` steps have
/// been taken, starting from `resume` when given.
pub fn pretrain(
    docs: &[Vec<u32>],
    vocab: &SubwordVocab,
    model: &ModelConfig,
    cfg: &TrainingConfig,
    resume: Option<Checkpoint>,
) -> Result<PretrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if model.vocab_size != vocab.size() {
        return Err(Error::config(format!(
            "model vocab_size {} differs from the vocabulary's {} pieces",
            model.vocab_size,
            vocab.size()
        )));
    }
    if cfg.max_seq_len > model.max_seq_len {
        return Err(Error::config("training max_seq_len exceeds the model's"));
    }
    check_corpus(docs, vocab.size())?;
    let windows = make_windows(docs, cfg.max_seq_len);
    if windows.is_empty() {
        return Err(Error::validation("tokenized corpus is empty"));
    }
    let vocab_digest = vocab.digest();
    let mut state = match resume {
        Some(ckpt) => {
            if ckpt.vocab_digest != vocab_digest {
                return Err(Error::config(
                    "checkpoint was trained with a different vocabulary",
                ));
            }
            if &ckpt.state.params.config != model {
                return Err(Error::config(
                    "checkpoint model configuration differs from the requested one",
                ));
            }
            if ckpt.training.seed != cfg.seed || ckpt.training.batch_size != cfg.batch_size {
                log::warn!("resuming with a different seed or batch size; the run will not match an uninterrupted one");
            }
            ckpt.state
        }
        None => TrainState::new(EncoderParams::init(model, cfg.seed)?),
    };
    let n = windows.len() as u64;
    let batch = cfg.batch_size as u64;
    let mut cached_epoch = None;
    let mut order = Vec::new();
    let mut losses = Vec::new();
    while state.step < cfg.steps {
        let step = state.step;
        let mut mlm = Vec::with_capacity(cfg.batch_size);
        for b in 0..batch {
            let sample = step * batch + b;
            let epoch = sample / n;
            if cached_epoch != Some(epoch) {
                order = epoch_order(windows.len(), cfg.seed, epoch);
                cached_epoch = Some(epoch);
            }
            let window = &windows[order[(sample % n) as usize]];
            let seed = derive_seed(cfg.seed, &[TAG_MASK, step, b]);
            mlm.extend(mlm_corrupt(window, cfg, seed, vocab.size()));
        }
        if mlm.is_empty() {
            log::warn!("step {step}: no maskable sequence in the batch; skipped");
            state.step += 1;
            continue;
        }
        let loss = train_step(
            &mut state,
            &Batch {
                mlm,
                classify: Vec::new(),
            },
            cfg,
        )?;
        if state.step % 100 == 0 {
            log::info!("step {} loss {loss:.4}", state.step);
        }
        losses.push(loss);
    }
    Ok(PretrainOutcome {
        checkpoint: Checkpoint {
            training: cfg.clone(),
            vocab_digest,
            state,
        },
        losses,
    })
}

/// Fine-tunes every weight of `base` on labeled token sequences with a fresh
/// `num_labels`-way classifier on the CLS state.
///
/// `train` holds raw piece ids; CLS/SEP are added here.
pub fn finetune(
    base: &EncoderParams,
    train: &[(Vec<u32>, usize)],
    num_labels: usize,
    cfg: &TrainingConfig,
) -> Result<EncoderParams> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::validation("fine-tuning set is empty"));
    }
    if let Some((_, bad)) = train.iter().find(|(_, l)| *l >= num_labels) {
        return Err(Error::validation(format!(
            "label {bad} is outside {num_labels} classes"
        )));
    }
    let first = train[0].1;
    if num_labels < 2 || train.iter().all(|(_, l)| *l == first) {
        return Err(Error::config("fine-tuning needs at least two classes"));
    }
    let mut params = base.clone();
    params.reset_classifier(num_labels, derive_seed(cfg.seed, &[TAG_HEAD]))?;
    let examples: Vec<ClassExample> = train
        .iter()
        .map(|(ids, label)| ClassExample {
            ids: wrap_sequence(ids, cfg.max_seq_len),
            label: *label,
        })
        .collect();
    let mut state = TrainState::new(params);
    for epoch in 0..cfg.epochs as u64 {
        let order = epoch_order(examples.len(), cfg.seed, epoch);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = Batch {
                mlm: Vec::new(),
                classify: chunk.iter().map(|&i| examples[i].clone()).collect(),
            };
            epoch_loss += train_step(&mut state, &batch, cfg)?;
            batches += 1;
        }
        log::info!(
            "epoch {} mean loss {:.4}",
            epoch + 1,
            epoch_loss / batches as f64
        );
    }
    Ok(state.params)
}

/// Class with the highest logit for raw piece ids (lowest id on ties).
pub fn predict(params: &EncoderParams, ids: &[u32]) -> Result<usize> {
    let wrapped = wrap_sequence(ids, params.config.max_seq_len);
    let (hidden, _) = forward_cached(&wrapped, params)?;
    let logits = classifier_logits(&hidden, params);
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::PAD;

    fn desk() -> EncoderParams {
        EncoderParams::init(&ModelConfig::desk(50), 11).unwrap()
    }

    #[test]
    fn twenty_maskable_tokens_select_three() {
        let mut ids = vec![CLS];
        ids.extend((0..20).map(|i| 5 + i as u32));
        ids.push(SEP);
        let ex = mlm_corrupt(&ids, &TrainingConfig::default(), 9, 50).unwrap();
        assert_eq!(ex.labels.iter().filter(|l| l.is_some()).count(), 3);
        assert!(ex.labels[0].is_none() && ex.labels[21].is_none());
        for (p, l) in ex.labels.iter().enumerate() {
            if let Some(t) = l {
                assert_eq!(*t, ids[p]);
            } else {
                assert_eq!(ex.input[p], ids[p]);
            }
        }
        assert_eq!(
            ex,
            mlm_corrupt(&ids, &TrainingConfig::default(), 9, 50).unwrap()
        );
    }

    #[test]
    fn full_masking_replaces_every_ordinary_piece() {
        let cfg = TrainingConfig {
            mask_fraction: 1.0,
            mask_token_prob: 1.0,
            random_token_prob: 0.0,
            ..TrainingConfig::default()
        };
        let ids = [CLS, 7, 8, 9, SEP];
        let ex = mlm_corrupt(&ids, &cfg, 1, 50).unwrap();
        assert_eq!(ex.input, vec![CLS, MASK, MASK, MASK, SEP]);
        assert!(mlm_corrupt(&[CLS, PAD, SEP], &cfg, 1, 50).is_none());
    }

    #[test]
    fn corruption_split_is_roughly_eighty_ten_ten() {
        let ids: Vec<u32> = (0..1000).map(|i| 5 + (i % 40) as u32).collect();
        let cfg = TrainingConfig {
            mask_fraction: 1.0,
            ..TrainingConfig::default()
        };
        let ex = mlm_corrupt(&ids, &cfg, 3, 50).unwrap();
        let masked = ex.input.iter().filter(|&&t| t == MASK).count();
        let same = ex.input.iter().zip(&ids).filter(|(a, b)| a == b).count();
        assert!((740..860).contains(&masked), "{masked}");
        // unchanged = 10% kept plus random draws that hit the original piece
        assert!((70..160).contains(&same), "{same}");
    }

    #[test]
    fn windows_respect_the_length_limit() {
        let docs = vec![(5..15).collect::<Vec<u32>>(), vec![], vec![9]];
        let w = make_windows(&docs, 6);
        assert_eq!(w.len(), 4);
        assert_eq!(w[0], vec![CLS, 5, 6, 7, 8, SEP]);
        assert_eq!(w[2], vec![CLS, 13, 14, SEP]);
        assert_eq!(w[3], vec![CLS, 9, SEP]);
        assert!(w.iter().all(|s| s.len() <= 6));
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let params = desk();
        let mut state = TrainState::new(params.clone());
        let cfg = TrainingConfig {
            learning_rate: 0.0,
            ..TrainingConfig::default()
        };
        let ex = mlm_corrupt(&[CLS, 9, 10, 11, 12, SEP], &cfg, 1, 50).unwrap();
        let loss = train_step(
            &mut state,
            &Batch {
                mlm: vec![ex],
                classify: vec![],
            },
            &cfg,
        )
        .unwrap();
        assert!(loss.is_finite() && loss > 0.0);
        assert_eq!(state.params, params);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn repeated_steps_on_one_batch_reduce_the_loss() {
        let cfg = TrainingConfig {
            learning_rate: 1e-3,
            ..TrainingConfig::default()
        };
        let mut state = TrainState::new(desk());
        let batch = Batch {
            mlm: (0..4)
                .map(|i| {
                    mlm_corrupt(
                        &[CLS, 9 + i, 20, 31 + i, 44, 7, SEP],
                        &cfg,
                        u64::from(i),
                        50,
                    )
                    .unwrap()
                })
                .collect(),
            classify: vec![],
        };
        let losses: Vec<f64> = (0..50)
            .map(|_| train_step(&mut state, &batch, &cfg).unwrap())
            .collect();
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "{losses:?}");
        }
    }

    #[test]
    fn empty_or_unlabeled_batches_are_errors() {
        let p = desk();
        assert!(loss_and_gradients(&p, &Batch::default()).is_err());
        let ex = MlmExample {
            input: vec![CLS, 9, SEP],
            labels: vec![None; 3],
        };
        assert!(loss_and_gradients(
            &p,
            &Batch {
                mlm: vec![ex],
                classify: vec![]
            }
        )
        .is_err());
    }

    #[test]
    fn finetune_validates_labels() {
        let p = desk();
        let cfg = TrainingConfig::default();
        let single = vec![(vec![9, 10], 0), (vec![11], 0)];
        assert!(matches!(
            finetune(&p, &single, 2, &cfg),
            Err(Error::Config(_))
        ));
        let out_of_range = vec![(vec![9, 10], 0), (vec![11], 2)];
        assert!(matches!(
            finetune(&p, &out_of_range, 2, &cfg),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn zero_epochs_leave_the_head_at_initialization() {
        let p = desk();
        let cfg = TrainingConfig {
            epochs: 0,
            ..TrainingConfig::default()
        };
        let data = vec![(vec![9, 10], 0), (vec![11], 1)];
        let tuned = finetune(&p, &data, 3, &cfg).unwrap();
        let mut expect = p.clone();
        expect
            .reset_classifier(3, derive_seed(cfg.seed, &[TAG_HEAD]))
            .unwrap();
        assert_eq!(tuned, expect);
    }

    #[test]
    fn derived_seeds_differ_by_every_part() {
        let a = derive_seed(1, &[2, 3]);
        assert_ne!(a, derive_seed(1, &[3, 2]));
        assert_ne!(a, derive_seed(2, &[2, 3]));
        assert_eq!(a, derive_seed(1, &[2, 3]));
    }
}
