//! Unigram language-model subword tokenizer.
//!
//! Each whitespace-delimited word is prefixed with [`WORD_BOUNDARY`]
//! (U+2581) before segmentation, so `"يا هلا"` is segmented as `"▁يا"` and
//! `"▁هلا"`; decoding maps the marker back to a space.

mod trainer;
mod trie;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use trainer::{train_unigram, train_unigram_from_lines, TrainerConfig, TrainingTrace};
use trie::PieceTrie;

pub const WORD_BOUNDARY: char = '\u{2581}';

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const MASK: u32 = 4;
pub const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];
pub const NUM_SPECIALS: usize = SPECIALS.len();

/// Score assigned to an unknown character during segmentation.
const UNK_PENALTY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub surface: String,
    pub logprob: f64,
}

#[derive(Debug, Clone)]
pub struct SubwordVocab {
    pieces: Vec<Piece>,
    index: HashMap<String, u32>,
    trie: PieceTrie,
    unk_score: f64,
}

impl PartialEq for SubwordVocab {
    fn eq(&self, other: &Self) -> bool {
        self.pieces == other.pieces
    }
}

impl SubwordVocab {
    /// Builds a vocabulary from non-special pieces; specials are prepended.
    pub fn from_pieces(pieces: Vec<(String, f64)>) -> Result<Self> {
        let mut all: Vec<Piece> = SPECIALS
            .iter()
            .map(|s| Piece {
                surface: s.to_string(),
                logprob: 0.0,
            })
            .collect();
        all.extend(
            pieces
                .into_iter()
                .map(|(surface, logprob)| Piece { surface, logprob }),
        );
        Self::from_all(all)
    }

    fn from_all(pieces: Vec<Piece>) -> Result<Self> {
        for (i, s) in SPECIALS.iter().enumerate() {
            match pieces.get(i) {
                Some(p) if p.surface == *s => {}
                _ => return Err(Error::validation(format!("vocab entry {i} must be {s}"))),
            }
        }
        let mut index = HashMap::with_capacity(pieces.len());
        let mut trie = PieceTrie::default();
        let mut min_lp = 0.0f64;
        for (id, p) in pieces.iter().enumerate() {
            if p.surface.is_empty() || p.surface.chars().any(|c| c.is_whitespace()) {
                return Err(Error::validation(format!(
                    "piece {id} has an invalid surface"
                )));
            }
            if index.insert(p.surface.clone(), id as u32).is_some() {
                return Err(Error::validation(format!(
                    "duplicate piece {:?}",
                    p.surface
                )));
            }
            if id < NUM_SPECIALS {
                continue;
            }
            if !p.logprob.is_finite() || p.logprob > 0.0 {
                return Err(Error::validation(format!(
                    "piece {:?} has logprob {} (must be finite and <= 0)",
                    p.surface, p.logprob
                )));
            }
            min_lp = min_lp.min(p.logprob);
            trie.insert(&p.surface, id as u32);
        }
        Ok(SubwordVocab {
            pieces,
            index,
            trie,
            unk_score: min_lp - UNK_PENALTY,
        })
    }

    pub fn size(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn id_of(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> Option<&str> {
        self.pieces.get(id as usize).map(|p| p.surface.as_str())
    }

    pub fn logprob(&self, id: u32) -> f64 {
        self.pieces[id as usize].logprob
    }

    pub fn is_special(id: u32) -> bool {
        (id as usize) < NUM_SPECIALS
    }

    /// `(length, id)` of every non-special piece that prefixes `text`.
    pub(crate) fn prefixes<'a>(
        &'a self,
        text: &'a [char],
    ) -> impl Iterator<Item = (usize, u32)> + 'a {
        self.trie.prefixes(text)
    }

    /// Segments one word (marker already attached). Maximizes the summed
    /// logprob; ties go to fewer pieces, then to the longer leftmost piece.
    pub(crate) fn segment_chars(&self, word: &[char]) -> Vec<u32> {
        self.segment_chars_excluding(word, None).0
    }

    /// Viterbi with one piece disabled; also returns the total score.
    pub(crate) fn segment_chars_excluding(
        &self,
        word: &[char],
        skip: Option<u32>,
    ) -> (Vec<u32>, f64) {
        let n = word.len();
        // best[i]: (score, pieces, next position, piece id) for the suffix at i
        let mut best: Vec<(f64, usize, usize, u32)> = vec![(f64::NEG_INFINITY, 0, 0, UNK); n + 1];
        best[n] = (0.0, 0, n, UNK);
        for i in (0..n).rev() {
            let mut cand = best[i];
            let mut consider = |j: usize, id: u32, score: f64| {
                let (rest, count, _, _) = best[j];
                if rest == f64::NEG_INFINITY {
                    return;
                }
                let total = score + rest;
                let better = total > cand.0
                    || (total == cand.0
                        && (count + 1 < cand.1 || (count + 1 == cand.1 && j > cand.2)));
                if better {
                    cand = (total, count + 1, j, id);
                }
            };
            let mut any_single = false;
            for (len, id) in self.trie.prefixes(&word[i..]) {
                if Some(id) == skip {
                    continue;
                }
                if len == 1 {
                    any_single = true;
                }
                consider(i + len, id, self.pieces[id as usize].logprob);
            }
            if !any_single {
                consider(i + 1, UNK, self.unk_score);
            }
            best[i] = cand;
        }
        let mut ids = Vec::new();
        let mut i = 0;
        if best[0].0 == f64::NEG_INFINITY {
            return (ids, f64::NEG_INFINITY);
        }
        while i < n {
            let (_, _, j, id) = best[i];
            ids.push(id);
            i = j;
        }
        (ids, best[0].0)
    }

    /// Viterbi segmentation of `text`, word by word.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut ids = Vec::new();
        let mut buf = Vec::new();
        for word in text.split_whitespace() {
            buf.clear();
            buf.push(WORD_BOUNDARY);
            buf.extend(word.chars());
            ids.extend(self.segment_chars(&buf));
        }
        ids
    }

    /// Concatenates surfaces, turns markers into spaces and drops specials.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut out = String::new();
        for &id in ids {
            let p = self.pieces.get(id as usize).ok_or_else(|| {
                Error::validation(format!(
                    "token id {id} out of range (vocab size {})",
                    self.size()
                ))
            })?;
            if Self::is_special(id) {
                continue;
            }
            out.extend(
                p.surface
                    .chars()
                    .map(|c| if c == WORD_BOUNDARY { ' ' } else { c }),
            );
        }
        Ok(out.strip_prefix(' ').map(str::to_string).unwrap_or(out))
    }

    /// Sum of piece logprobs of a segmentation.
    pub fn score(&self, ids: &[u32]) -> f64 {
        ids.iter()
            .map(|&id| {
                if id == UNK {
                    self.unk_score
                } else {
                    self.logprob(id)
                }
            })
            .sum()
    }

    /// `surface<TAB>logprob` per line, specials first.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            writeln!(s, "{}\t{}", p.surface, p.logprob).unwrap();
        }
        s
    }

    pub fn parse(contents: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        for (n, line) in contents.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (surface, lp) = line
                .split_once('\t')
                .ok_or_else(|| Error::validation(format!("vocab line {}: missing tab", n + 1)))?;
            let logprob: f64 = lp.trim().parse().map_err(|_| {
                Error::validation(format!("vocab line {}: bad logprob {lp:?}", n + 1))
            })?;
            if n < NUM_SPECIALS && logprob != 0.0 {
                return Err(Error::validation(format!(
                    "special {surface} must have logprob 0"
                )));
            }
            pieces.push(Piece {
                surface: surface.to_string(),
                logprob,
            });
        }
        Self::from_all(pieces)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&s)
    }

    /// Hex SHA-256 of the serialized vocabulary.
    pub fn digest(&self) -> String {
        hex_digest(self.to_file_string().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Token-id stream line: decimal ids separated by single spaces.
pub fn ids_to_line(ids: &[u32]) -> String {
    let mut s = String::with_capacity(ids.len() * 4);
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{id}").unwrap();
    }
    s
}

pub fn line_to_ids(line: &str) -> Result<Vec<u32>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|_| Error::validation(format!("bad token id {t:?}")))
        })
        .collect()
}
