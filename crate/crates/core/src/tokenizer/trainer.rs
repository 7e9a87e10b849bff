//! Unigram LM training: frequent-substring seeding, EM over all
//! segmentations, and pruning of the pieces whose removal costs least.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SubwordVocab, NUM_SPECIALS, WORD_BOUNDARY};
use crate::error::{Error, Result};

/// Words per E-step work unit; fixed so the reduction order never depends
/// on the thread count.
const E_STEP_CHUNK: usize = 256;
/// Floor for expected counts so every logprob stays finite.
const MIN_COUNT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Final vocabulary size, special tokens included.
    pub vocab_size: usize,
    pub character_coverage: f64,
    /// EM iterations per pruning round.
    pub em_iters: usize,
    /// Fraction of pieces kept by each pruning round.
    pub shrink_factor: f64,
    pub max_piece_len: usize,
    /// Seed table size as a multiple of `vocab_size`.
    pub seed_factor: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            vocab_size: 75_000,
            character_coverage: 0.9995,
            em_iters: 2,
            shrink_factor: 0.75,
            max_piece_len: 8,
            seed_factor: 4,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= NUM_SPECIALS {
            return Err(Error::config(
                "vocab_size must exceed the number of special tokens",
            ));
        }
        if !(self.character_coverage > 0.0 && self.character_coverage <= 1.0) {
            return Err(Error::config("character_coverage must be in (0, 1]"));
        }
        if self.em_iters == 0 {
            return Err(Error::config("em_iters must be at least 1"));
        }
        if !(self.shrink_factor > 0.0 && self.shrink_factor < 1.0) {
            return Err(Error::config("shrink_factor must be in (0, 1)"));
        }
        if self.max_piece_len == 0 || self.seed_factor == 0 {
            return Err(Error::config(
                "max_piece_len and seed_factor must be positive",
            ));
        }
        Ok(())
    }
}

/// Per-round corpus negative log-likelihood (per word occurrence) measured
/// before the first EM iteration and after each one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub rounds: Vec<Vec<f64>>,
    /// Piece count (specials excluded) during each round.
    pub sizes: Vec<usize>,
}

struct Corpus {
    /// Word segments (marker attached) and their frequencies, sorted.
    words: Vec<(Vec<char>, u64)>,
    total: u64,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Forward-backward over one word: adds `freq` × posterior piece counts
/// into `expected` and returns log Z.
fn accumulate_word(
    vocab: &SubwordVocab,
    word: &[char],
    freq: f64,
    expected: &mut HashMap<u32, f64>,
) -> f64 {
    let n = word.len();
    let mut alpha = vec![f64::NEG_INFINITY; n + 1];
    alpha[0] = 0.0;
    for i in 0..n {
        if alpha[i] == f64::NEG_INFINITY {
            continue;
        }
        for (len, id) in vocab.prefixes(&word[i..]) {
            alpha[i + len] = log_add(alpha[i + len], alpha[i] + vocab.logprob(id));
        }
    }
    let z = alpha[n];
    if z == f64::NEG_INFINITY {
        return z;
    }
    let mut beta = vec![f64::NEG_INFINITY; n + 1];
    beta[n] = 0.0;
    for i in (0..n).rev() {
        for (len, id) in vocab.prefixes(&word[i..]) {
            beta[i] = log_add(beta[i], vocab.logprob(id) + beta[i + len]);
        }
    }
    for i in 0..n {
        if alpha[i] == f64::NEG_INFINITY {
            continue;
        }
        for (len, id) in vocab.prefixes(&word[i..]) {
            let post = (alpha[i] + vocab.logprob(id) + beta[i + len] - z).exp();
            *expected.entry(id).or_insert(0.0) += freq * post;
        }
    }
    z
}

/// Expected piece counts and NLL per word occurrence under `vocab`.
fn e_step(vocab: &SubwordVocab, corpus: &Corpus) -> (Vec<f64>, f64) {
    let parts: Vec<(HashMap<u32, f64>, f64)> = corpus
        .words
        .par_chunks(E_STEP_CHUNK)
        .map(|chunk| {
            let mut expected = HashMap::new();
            let mut loglik = 0.0;
            for (w, f) in chunk {
                loglik += *f as f64 * accumulate_word(vocab, w, *f as f64, &mut expected);
            }
            (expected, loglik)
        })
        .collect();
    let mut expected = vec![0.0; vocab.size()];
    let mut loglik = 0.0;
    for (part, ll) in parts {
        for (id, c) in part {
            expected[id as usize] += c;
        }
        loglik += ll;
    }
    (expected, -loglik / corpus.total as f64)
}

fn m_step(vocab: &SubwordVocab, expected: &[f64]) -> Result<SubwordVocab> {
    let counts: Vec<f64> = expected[NUM_SPECIALS..]
        .iter()
        .map(|&c| c.max(MIN_COUNT))
        .collect();
    let total: f64 = counts.iter().sum();
    let log_total = total.ln();
    let pieces = vocab.pieces()[NUM_SPECIALS..]
        .iter()
        .zip(&counts)
        .map(|(p, &c)| (p.surface.clone(), (c.ln() - log_total).min(0.0)))
        .collect();
    SubwordVocab::from_pieces(pieces)
}

/// Drops the pieces whose removal loses the least likelihood, keeping
/// `keep` pieces (specials excluded). Required characters always stay.
fn prune(
    vocab: &SubwordVocab,
    corpus: &Corpus,
    required: &[bool],
    keep: usize,
) -> Result<SubwordVocab> {
    let size = vocab.size();
    let mut freq = vec![0.0f64; size];
    let viterbi: Vec<Vec<u32>> = corpus
        .words
        .par_iter()
        .map(|(w, _)| vocab.segment_chars(w))
        .collect();
    let mut vsum = 0.0;
    for ((_, f), seg) in corpus.words.iter().zip(&viterbi) {
        let f = *f as f64;
        vsum += f;
        for &id in seg {
            freq[id as usize] += f;
        }
    }
    let sum: f64 = freq.iter().sum();
    let logsum = sum.ln();

    let mut scored: Vec<(usize, f64)> = Vec::new();
    for id in NUM_SPECIALS..size {
        if required[id - NUM_SPECIALS] {
            continue;
        }
        let chars: Vec<char> = vocab.pieces()[id].surface.chars().collect();
        let own = vocab.segment_chars(&chars);
        let loss = if freq[id] == 0.0 || own != [id as u32] {
            // never chosen by Viterbi: free to drop
            f64::NEG_INFINITY
        } else {
            let (alt, _) = vocab.segment_chars_excluding(&chars, Some(id as u32));
            let f = freq[id] / vsum;
            let logprob_sp = freq[id].ln() - logsum;
            let logsum_alt = (sum + freq[id] * (alt.len() as f64 - 1.0)).ln();
            let logprob_alt: f64 = alt
                .iter()
                .map(|&n| (freq[n as usize] + freq[id]).ln() - logsum_alt)
                .sum();
            f * (logprob_sp - logprob_alt)
        };
        scored.push((id, loss));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let n_required = required.iter().filter(|&&r| r).count();
    let mut kept = vec![false; size];
    for (i, r) in required.iter().enumerate() {
        kept[i + NUM_SPECIALS] = *r;
    }
    for (id, _) in scored.into_iter().take(keep.saturating_sub(n_required)) {
        kept[id] = true;
    }
    let pieces = vocab.pieces()[NUM_SPECIALS..]
        .iter()
        .enumerate()
        .filter(|(i, _)| kept[i + NUM_SPECIALS])
        .map(|(_, p)| (p.surface.clone(), p.logprob))
        .collect();
    SubwordVocab::from_pieces(pieces)
}

/// Trains on an iterator of documents (one per item).
pub fn train_unigram_from_lines<I, S>(
    lines: I,
    cfg: &TrainerConfig,
) -> Result<(SubwordVocab, TrainingTrace)>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    cfg.validate()?;
    let mut word_counts: HashMap<String, u64> = HashMap::new();
    for line in lines {
        for w in line.as_ref().split_whitespace() {
            *word_counts.entry(w.to_string()).or_insert(0) += 1;
        }
    }
    if word_counts.is_empty() {
        return Err(Error::validation("tokenizer training corpus is empty"));
    }

    let mut char_counts: HashMap<char, u64> = HashMap::new();
    for (w, &f) in &word_counts {
        *char_counts.entry(WORD_BOUNDARY).or_insert(0) += f;
        for c in w.chars() {
            *char_counts.entry(c).or_insert(0) += f;
        }
    }
    let mut by_freq: Vec<(char, u64)> = char_counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let char_total: u64 = by_freq.iter().map(|(_, f)| f).sum();
    let mut covered: HashMap<char, u64> = HashMap::new();
    let mut acc = 0u64;
    for &(c, f) in &by_freq {
        if !covered.is_empty() && acc as f64 >= cfg.character_coverage * char_total as f64 {
            break;
        }
        covered.insert(c, f);
        acc += f;
    }
    if cfg.vocab_size < NUM_SPECIALS + covered.len() {
        return Err(Error::config(format!(
            "vocab_size {} cannot hold {} specials plus {} required characters",
            cfg.vocab_size,
            NUM_SPECIALS,
            covered.len()
        )));
    }

    // words split at uncovered characters; only the first part keeps the marker
    let mut segments: HashMap<Vec<char>, u64> = HashMap::new();
    for (w, &f) in &word_counts {
        let mut cur = vec![WORD_BOUNDARY];
        for c in w.chars() {
            if covered.contains_key(&c) {
                cur.push(c);
            } else if !cur.is_empty() {
                *segments.entry(std::mem::take(&mut cur)).or_insert(0) += f;
            }
        }
        if !cur.is_empty() {
            *segments.entry(cur).or_insert(0) += f;
        }
    }
    let mut words: Vec<(Vec<char>, u64)> = segments.into_iter().collect();
    words.sort();
    let total = words.iter().map(|(_, f)| f).sum();
    let corpus = Corpus { words, total };

    let mut substr: HashMap<Vec<char>, u64> = HashMap::new();
    for (w, f) in &corpus.words {
        for i in 0..w.len() {
            for len in 2..=cfg.max_piece_len.min(w.len() - i) {
                *substr.entry(w[i..i + len].to_vec()).or_insert(0) += f;
            }
        }
    }
    let mut candidates: Vec<(Vec<char>, u64)> = substr.into_iter().collect();
    candidates.sort_by(|a, b| {
        (b.1 * b.0.len() as u64)
            .cmp(&(a.1 * a.0.len() as u64))
            .then_with(|| a.0.cmp(&b.0))
    });
    let seed_budget = (cfg.seed_factor * cfg.vocab_size).saturating_sub(covered.len());
    candidates.truncate(seed_budget);

    let target = cfg.vocab_size - NUM_SPECIALS;
    let available = covered.len() + candidates.len();
    if available < target {
        return Err(Error::config(format!(
            "corpus yields only {available} distinct pieces; vocab_size {} is too large",
            cfg.vocab_size
        )));
    }

    let mut required_chars: Vec<(char, u64)> = covered.into_iter().collect();
    required_chars.sort();
    let mut init: Vec<(String, u64)> = required_chars
        .iter()
        .map(|(c, f)| (c.to_string(), *f))
        .collect();
    init.extend(
        candidates
            .into_iter()
            .map(|(s, f)| (s.into_iter().collect(), f)),
    );
    let log_total = (init.iter().map(|(_, f)| *f as f64).sum::<f64>()).ln();
    let pieces: Vec<(String, f64)> = init
        .into_iter()
        .map(|(s, f)| (s, (f as f64).ln() - log_total))
        .collect();
    let mut vocab = SubwordVocab::from_pieces(pieces)?;

    let mut trace = TrainingTrace::default();
    loop {
        let size = vocab.size() - NUM_SPECIALS;
        let mut losses = Vec::with_capacity(cfg.em_iters + 1);
        for _ in 0..cfg.em_iters {
            let (expected, loss) = e_step(&vocab, &corpus);
            losses.push(loss);
            vocab = m_step(&vocab, &expected)?;
        }
        losses.push(e_step(&vocab, &corpus).1);
        log::debug!("unigram round: {size} pieces, loss {:?}", losses);
        trace.rounds.push(losses);
        trace.sizes.push(size);
        if size <= target {
            break;
        }
        let keep = target.max((size as f64 * cfg.shrink_factor) as usize);
        let required: Vec<bool> = vocab.pieces()[NUM_SPECIALS..]
            .iter()
            .map(|p| p.surface.chars().count() == 1)
            .collect();
        vocab = prune(&vocab, &corpus, &required, keep)?;
    }

    let mut final_pieces: Vec<(String, f64)> = vocab.pieces()[NUM_SPECIALS..]
        .iter()
        .map(|p| (p.surface.clone(), p.logprob))
        .collect();
    final_pieces.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok((SubwordVocab::from_pieces(final_pieces)?, trace))
}

/// Trains on a one-doc-per-line corpus file.
pub fn train_unigram(path: &Path, cfg: &TrainerConfig) -> Result<(SubwordVocab, TrainingTrace)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(f).lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    train_unigram_from_lines(&lines, cfg)
}
