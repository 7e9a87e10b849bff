//! Corpus bookkeeping: exact deduplication, seeded subsampling and
//! word/sentence statistics over one-doc-per-line files.

use std::collections::HashMap;
use std::hash::Hasher;
use std::io::{BufRead, Write};
use std::ops::{Add, AddAssign};
use std::path::Path;

use fnv::FnvHasher;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::parallel;

/// Characters that end a sentence.
pub const SENTENCE_TERMINATORS: [char; 5] = ['.', '!', '?', '\u{061F}', '\u{06D4}'];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: u64,
    pub words: u64,
    pub sentences: u64,
    pub bytes: u64,
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(self, o: CorpusStats) -> CorpusStats {
        CorpusStats {
            documents: self.documents + o.documents,
            words: self.words + o.words,
            sentences: self.sentences + o.sentences,
            bytes: self.bytes + o.bytes,
        }
    }
}

impl AddAssign for CorpusStats {
    fn add_assign(&mut self, o: CorpusStats) {
        *self = *self + o;
    }
}

impl CorpusStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

/// Nonempty segments between terminators; at least one per document.
pub fn sentence_count(doc: &str) -> u64 {
    let n = doc
        .split(SENTENCE_TERMINATORS)
        .filter(|seg| !seg.trim().is_empty())
        .count() as u64;
    n.max(1)
}

fn line_stats(line: &str) -> CorpusStats {
    if line.trim().is_empty() {
        return CorpusStats::default();
    }
    CorpusStats {
        documents: 1,
        words: line.split_whitespace().count() as u64,
        sentences: sentence_count(line),
        bytes: 0,
    }
}

/// Statistics of a one-doc-per-line stream. `bytes` is the raw stream length,
/// so stats are additive over file concatenation.
pub fn stats_from_reader<R: BufRead>(mut input: R) -> Result<CorpusStats> {
    let mut total = CorpusStats::default();
    let mut block: Vec<String> = Vec::with_capacity(parallel::BLOCK_LINES);
    let mut buf = Vec::new();
    let flush = |block: &mut Vec<String>, total: &mut CorpusStats| {
        let parts = parallel::map_ordered(block, |l| line_stats(l));
        for p in parts {
            *total += p;
        }
        block.clear();
    };
    loop {
        buf.clear();
        let n = input.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        total.bytes += n as u64;
        let line = std::str::from_utf8(&buf)
            .map_err(|e| Error::validation(format!("corpus is not UTF-8: {e}")))?;
        block.push(line.trim_end_matches(['\n', '\r']).to_string());
        if block.len() == parallel::BLOCK_LINES {
            flush(&mut block, &mut total);
        }
    }
    flush(&mut block, &mut total);
    Ok(total)
}

pub fn compute_stats(path: &Path) -> Result<CorpusStats> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    stats_from_reader(std::io::BufReader::new(f))
}

/// SHA-256 truncated to 128 bits plus an independent 64-bit FNV-1a digest
/// used to confirm a hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TextDigest {
    pub primary: u128,
    pub check: u64,
}

impl TextDigest {
    pub fn of(text: &str) -> Self {
        let full = Sha256::digest(text.as_bytes());
        let mut head = [0u8; 16];
        head.copy_from_slice(&full[..16]);
        let mut fnv = FnvHasher::default();
        fnv.write(text.as_bytes());
        TextDigest {
            primary: u128::from_le_bytes(head),
            check: fnv.finish(),
        }
    }
}

/// Membership set keyed by the primary digest. A primary hit with a
/// different check digest is a collision and the text is kept.
#[derive(Debug, Default)]
pub struct DedupState {
    seen: HashMap<u128, Vec<u64>>,
    pub duplicates_dropped: u64,
}

impl DedupState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true when the digest is new (the document survives).
    pub fn insert(&mut self, d: TextDigest) -> bool {
        let checks = self.seen.entry(d.primary).or_default();
        if checks.contains(&d.check) {
            self.duplicates_dropped += 1;
            false
        } else {
            checks.push(d.check);
            true
        }
    }

    pub fn distinct(&self) -> usize {
        self.seen.values().map(Vec::len).sum()
    }
}

/// Keeps the first occurrence of each exact text, in input order.
pub fn dedup_texts<S: AsRef<str>>(docs: &[S]) -> Vec<&str> {
    let mut state = DedupState::new();
    docs.iter()
        .map(AsRef::as_ref)
        .filter(|t| state.insert(TextDigest::of(t)))
        .collect()
}

/// Survivor mask for one block using `shards.len()` hash partitions; each
/// partition sees its documents in input order.
fn dedup_block_sharded(shards: &mut [DedupState], digests: &[TextDigest]) -> Vec<bool> {
    let n = shards.len() as u128;
    let mut keep = vec![false; digests.len()];
    let decided: Vec<Vec<(usize, bool)>> = shards
        .par_iter_mut()
        .enumerate()
        .map(|(s, state)| {
            digests
                .iter()
                .enumerate()
                .filter(|(_, d)| d.primary % n == s as u128)
                .map(|(i, d)| (i, state.insert(*d)))
                .collect()
        })
        .collect();
    for part in decided {
        for (i, k) in part {
            keep[i] = k;
        }
    }
    keep
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub input: u64,
    pub output: u64,
    pub duplicates_dropped: u64,
}

/// Streams a one-doc-per-line corpus, dropping exact duplicates.
/// `shards` = 1 is the serial mode; any value yields the same survivors.
pub fn dedup_stream<R: BufRead, W: Write>(
    input: R,
    mut out: W,
    shards: usize,
) -> Result<DedupReport> {
    let shards = shards.max(1);
    let mut states: Vec<DedupState> = (0..shards).map(|_| DedupState::new()).collect();
    let mut report = DedupReport::default();
    parallel::for_each_block(input, |block| {
        let digests = parallel::map_ordered(block, |l| TextDigest::of(l));
        let keep = if shards == 1 {
            digests.iter().map(|d| states[0].insert(*d)).collect()
        } else {
            dedup_block_sharded(&mut states, &digests)
        };
        for (line, k) in block.iter().zip(keep) {
            report.input += 1;
            if k {
                report.output += 1;
                writeln!(out, "{line}")?;
            }
        }
        Ok(())
    })?;
    out.flush()?;
    report.duplicates_dropped = states.iter().map(|s| s.duplicates_dropped).sum();
    debug_assert_eq!(report.duplicates_dropped, report.input - report.output);
    Ok(report)
}

pub fn check_fraction(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("sample fraction {p} not in (0, 1]")))
    }
}

/// Bernoulli(p) draw for the document at `index`. Draws are addressed by
/// index in a seeded ChaCha stream, so they do not depend on processing order.
pub fn keep_in_sample(seed: u64, index: u64, p: f64) -> bool {
    if p >= 1.0 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(u128::from(index) * 2);
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u < p
}

pub fn sample_fraction<T: Clone>(docs: &[T], p: f64, seed: u64) -> Result<Vec<T>> {
    check_fraction(p)?;
    Ok(docs
        .iter()
        .enumerate()
        .filter(|(i, _)| keep_in_sample(seed, *i as u64, p))
        .map(|(_, d)| d.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleReport {
    pub input: u64,
    pub kept: u64,
}

pub fn sample_stream<R: BufRead, W: Write>(
    input: R,
    mut out: W,
    p: f64,
    seed: u64,
) -> Result<SampleReport> {
    check_fraction(p)?;
    let mut report = SampleReport::default();
    parallel::for_each_block(input, |block| {
        let base = report.input;
        let idx: Vec<u64> = (0..block.len() as u64).collect();
        let keep = parallel::map_ordered(&idx, |&i| keep_in_sample(seed, base + i, p));
        for (line, k) in block.iter().zip(keep) {
            if k {
                report.kept += 1;
                writeln!(out, "{line}")?;
            }
        }
        report.input += block.len() as u64;
        Ok(())
    })?;
    out.flush()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn set_oracle(docs: &[String]) -> Vec<String> {
        let mut seen = HashSet::new();
        docs.iter()
            .filter(|d| seen.insert(d.as_str()))
            .cloned()
            .collect()
    }

    fn run_dedup(docs: &[String], shards: usize) -> (Vec<String>, DedupReport) {
        let input = docs.join("\n");
        let mut out = Vec::new();
        let report = dedup_stream(input.as_bytes(), &mut out, shards).unwrap();
        let text = String::from_utf8(out).unwrap();
        (text.lines().map(String::from).collect(), report)
    }

    #[test]
    fn dedup_examples() {
        assert_eq!(dedup_texts(&["a", "b", "a"]), vec!["a", "b"]);
        assert_eq!(dedup_texts(&["x", "y", "z"]), vec!["x", "y", "z"]);
        let (out, rep) = run_dedup(&["a".into(), "b".into(), "a".into()], 1);
        assert_eq!(out, vec!["a", "b"]);
        assert_eq!(rep.duplicates_dropped, 1);
    }

    #[test]
    fn digest_collision_is_not_a_duplicate() {
        let mut st = DedupState::new();
        let a = TextDigest {
            primary: 7,
            check: 1,
        };
        let b = TextDigest {
            primary: 7,
            check: 2,
        };
        assert!(st.insert(a));
        assert!(st.insert(b));
        assert!(!st.insert(a));
        assert_eq!(st.distinct(), 2);
        assert_eq!(st.duplicates_dropped, 1);
    }

    #[test]
    fn planted_duplicates() {
        // 7,000 distinct texts plus 3,000 repeats spread through the stream
        let mut docs: Vec<String> = (0..7000).map(|i| format!("نص رقم {i}")).collect();
        for j in 0..3000usize {
            let src = (j * 7919) % 7000;
            let pos = (j * 104729) % docs.len();
            let pos = pos.max(src + 1).min(docs.len());
            docs.insert(pos, format!("نص رقم {src}"));
        }
        let (serial, rep) = run_dedup(&docs, 1);
        assert_eq!(serial.len(), 7000);
        assert_eq!(serial, set_oracle(&docs));
        assert_eq!(rep.duplicates_dropped, 3000);
        let (sharded, _) = run_dedup(&docs, 4);
        assert_eq!(sharded, serial);
    }

    #[test]
    fn stats_examples() {
        let s = stats_from_reader("مرحبا يا هلا.\n".as_bytes()).unwrap();
        assert_eq!((s.documents, s.words, s.sentences), (1, 3, 1));
        assert_eq!(s.bytes, "مرحبا يا هلا.\n".len() as u64);
        let s = stats_from_reader("هلا. كيف الحال؟\n".as_bytes()).unwrap();
        assert_eq!(s.sentences, 2);
        assert_eq!(stats_from_reader(&b""[..]).unwrap(), CorpusStats::default());
        assert_eq!(sentence_count("..."), 1);
        assert!(compute_stats(Path::new("/nonexistent/corpus.txt")).is_err());
    }

    #[test]
    fn sampling() {
        let docs: Vec<u32> = (0..1000).collect();
        assert_eq!(sample_fraction(&docs, 1.0, 3).unwrap(), docs);
        assert_eq!(
            sample_fraction(&docs, 0.2, 9).unwrap(),
            sample_fraction(&docs, 0.2, 9).unwrap()
        );
        assert_ne!(
            sample_fraction(&docs, 0.2, 9).unwrap(),
            sample_fraction(&docs, 0.2, 10).unwrap()
        );
        assert!(sample_fraction(&docs, 0.0, 1).is_err());
        assert!(sample_fraction(&docs, 1.5, 1).is_err());
        assert!(sample_fraction(&docs, f64::NAN, 1).is_err());
    }

    #[test]
    fn sample_stream_matches_in_memory() {
        let docs: Vec<String> = (0..9000).map(|i| format!("doc {i}")).collect();
        let mut out = Vec::new();
        let rep = sample_stream(docs.join("\n").as_bytes(), &mut out, 0.3, 42).unwrap();
        let streamed: Vec<String> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        assert_eq!(streamed, sample_fraction(&docs, 0.3, 42).unwrap());
        assert_eq!(rep.kept as usize, streamed.len());
    }

    proptest! {
        #[test]
        fn dedup_matches_oracle(docs in proptest::collection::vec("[abc]{0,3}", 0..200), shards in 1usize..6) {
            let docs: Vec<String> = docs.into_iter().filter(|d| !d.trim().is_empty()).collect();
            let (out, _) = run_dedup(&docs, shards);
            prop_assert_eq!(&out, &set_oracle(&docs));
            let (again, rep) = run_dedup(&out, 1);
            prop_assert_eq!(again, out);
            prop_assert_eq!(rep.duplicates_dropped, 0);
        }

        #[test]
        fn stats_are_additive(a in proptest::collection::vec("[a-z .!؟]{0,20}", 0..10),
                              b in proptest::collection::vec("[a-z .!؟]{0,20}", 0..10)) {
            let fa: String = a.iter().map(|l| format!("{l}\n")).collect();
            let fb: String = b.iter().map(|l| format!("{l}\n")).collect();
            let sa = stats_from_reader(fa.as_bytes()).unwrap();
            let sb = stats_from_reader(fb.as_bytes()).unwrap();
            let sab = stats_from_reader(format!("{fa}{fb}").as_bytes()).unwrap();
            prop_assert_eq!(sab, sa + sb);
        }
    }
}
