//! Stage runners shared by the individual subcommands and `pipeline`, so
//! both paths produce byte-identical artifacts.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ModelSection;
use crate::clean::{clean_forum_dir, clean_tweet_stream, CleanConfig, CleanReport, Cleaner};
use crate::corpus::{dedup_stream, sample_stream, stats_from_reader, CorpusStats};
use crate::error::{Error, Result};
use crate::eval::{load_dataset, render_table, run_task, DatasetFormat, EvalConfig, EvalReport};
use crate::geo_filter::{filter_stream, load_term_list, TermList};
use crate::model::{finetune, pretrain, Checkpoint, TrainState, TrainingConfig};
use crate::parallel::{for_each_block, map_ordered};
use crate::tokenizer::{
    ids_to_line, line_to_ids, train_unigram_from_lines, SubwordVocab, TrainerConfig,
};

/// Path argument meaning standard input or output.
pub const STDIO: &str = "-";

pub fn open_input(path: &str) -> Result<Box<dyn BufRead>> {
    if path == STDIO {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufReader::new(file)))
}

pub fn create_output(path: &str) -> Result<Box<dyn Write>> {
    if path == STDIO {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

pub fn sidecar_path(output: &str) -> PathBuf {
    PathBuf::from(format!("{output}.meta.json"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Hex SHA-256 of a value's JSON form.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    sha256_hex(
        serde_json::to_string(value)
            .expect("config serializes")
            .as_bytes(),
    )
}

#[derive(Serialize)]
struct Provenance<'a, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_digest: &'a str,
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vocab_digest: Option<&'a str>,
    report: R,
}

/// Writes `<output>.meta.json`; nothing is written for standard output.
fn write_sidecar<R: Serialize>(
    output: &str,
    command: &str,
    config_digest: &str,
    seed: Option<u64>,
    vocab_digest: Option<&str>,
    report: R,
) -> Result<()> {
    if output == STDIO {
        return Ok(());
    }
    let meta = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_digest,
        seed,
        vocab_digest,
        report,
    };
    let path = sidecar_path(output);
    let json = serde_json::to_string_pretty(&meta).expect("provenance serializes") + "\n";
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn geo_filter(input: &str, output: &str, terms_path: Option<&Path>) -> Result<()> {
    let terms = match terms_path {
        Some(p) => load_term_list(p)?,
        None => TermList::builtin(),
    };
    let report = filter_stream(open_input(input)?, create_output(output)?, &terms)?;
    eprintln!("{}", report.to_text());
    let digest = digest_of(&terms.terms());
    write_sidecar(output, "geo-filter", &digest, None, None, report)
}

/// The rule constants of a cleaning run, echoed before it starts.
pub fn clean_header(cfg: &CleanConfig) -> String {
    format!(
        "clean rules: letter_rep_cap={} other_rep_cap={} min_words={} english_ratio_threshold={} \
         max_digit_run={} remove_hashtag_text={}",
        cfg.letter_rep_cap,
        cfg.other_rep_cap,
        cfg.min_words,
        cfg.english_ratio_threshold,
        cfg.max_digit_run,
        cfg.remove_hashtag_text
    )
}

fn merge(a: &mut CleanReport, b: CleanReport) {
    a.input += b.input;
    a.kept += b.kept;
    a.too_few_words += b.too_few_words;
    a.too_much_english += b.too_much_english;
    a.empty_after_cleaning += b.empty_after_cleaning;
    a.malformed += b.malformed;
}

/// Cleans tweets (JSONL) and then forum pages into one corpus; forum pages
/// always have markup stripped.
pub fn clean(
    tweets: Option<&str>,
    forum_dir: Option<&Path>,
    output: &str,
    rejected: Option<&str>,
    cfg: &CleanConfig,
) -> Result<()> {
    if tweets.is_none() && forum_dir.is_none() {
        return Err(Error::config(
            "clean needs a tweet input, a forum directory, or both",
        ));
    }
    eprintln!("{}", clean_header(cfg));
    let mut out = create_output(output)?;
    let mut rej: Box<dyn Write> = match rejected {
        Some(path) => create_output(path)?,
        None => Box::new(io::sink()),
    };
    let mut report = CleanReport::default();
    if let Some(input) = tweets {
        let cleaner = Cleaner::new(cfg.clone())?;
        merge(
            &mut report,
            clean_tweet_stream(&cleaner, open_input(input)?, &mut out, &mut rej)?,
        );
    }
    if let Some(dir) = forum_dir {
        let cleaner = Cleaner::new(CleanConfig {
            strip_markup: true,
            ..cfg.clone()
        })?;
        merge(
            &mut report,
            clean_forum_dir(&cleaner, dir, &mut out, &mut rej)?,
        );
    }
    out.flush()?;
    rej.flush()?;
    eprintln!("{}", report.to_text());
    write_sidecar(output, "clean", &digest_of(cfg), None, None, report)
}

pub fn dedup(input: &str, output: &str, shards: usize) -> Result<()> {
    let report = dedup_stream(open_input(input)?, create_output(output)?, shards)?;
    eprintln!(
        "dedup: input={} output={} duplicates_dropped={}",
        report.input, report.output, report.duplicates_dropped
    );
    // The shard count never changes the output, so it stays out of the digest.
    write_sidecar(
        output,
        "dedup",
        &digest_of(&"exact-sha256"),
        None,
        None,
        report,
    )
}

pub fn sample(input: &str, output: &str, fraction: f64, seed: u64) -> Result<()> {
    let report = sample_stream(open_input(input)?, create_output(output)?, fraction, seed)?;
    eprintln!("sample: input={} kept={}", report.input, report.kept);
    write_sidecar(
        output,
        "sample",
        &digest_of(&fraction),
        Some(seed),
        None,
        report,
    )
}

pub fn stats(input: &str, output: &str) -> Result<CorpusStats> {
    let stats = stats_from_reader(open_input(input)?)?;
    let mut out = create_output(output)?;
    writeln!(out, "{}", stats.to_json())?;
    out.flush()?;
    write_sidecar(output, "stats", &digest_of(&"stats"), None, None, stats)?;
    Ok(stats)
}

fn read_lines(input: &str) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for_each_block(open_input(input)?, |block| {
        lines.extend_from_slice(block);
        Ok(())
    })?;
    Ok(lines)
}

#[derive(Serialize)]
struct TokenizerReport {
    pieces: usize,
    pruning_rounds: usize,
    final_loss: Option<f64>,
}

pub fn tokenizer_train(input: &str, output: &str, cfg: &TrainerConfig) -> Result<()> {
    let lines = read_lines(input)?;
    let (vocab, trace) = train_unigram_from_lines(&lines, cfg)?;
    let mut out = create_output(output)?;
    out.write_all(vocab.to_file_string().as_bytes())?;
    out.flush()?;
    let report = TokenizerReport {
        pieces: vocab.size(),
        pruning_rounds: trace.rounds.len(),
        final_loss: trace.rounds.last().and_then(|r| r.last().copied()),
    };
    eprintln!("tokenizer-train: {} pieces", report.pieces);
    let digest = vocab.digest();
    write_sidecar(
        output,
        "tokenizer-train",
        &digest_of(cfg),
        None,
        Some(&digest),
        report,
    )
}

fn load_vocab(path: &Path) -> Result<SubwordVocab> {
    SubwordVocab::load(path)
}

#[derive(Serialize)]
struct TokenizeReport {
    documents: u64,
    pieces: u64,
}

/// Writes each document as a line of space-separated piece ids.
pub fn tokenize(input: &str, vocab_path: &Path, output: &str) -> Result<()> {
    let vocab = load_vocab(vocab_path)?;
    let mut out = create_output(output)?;
    let mut report = TokenizeReport {
        documents: 0,
        pieces: 0,
    };
    for_each_block(open_input(input)?, |block| {
        for ids in map_ordered(block, |line| vocab.encode(line)) {
            report.documents += 1;
            report.pieces += ids.len() as u64;
            writeln!(out, "{}", ids_to_line(&ids))?;
        }
        Ok(())
    })?;
    out.flush()?;
    eprintln!(
        "tokenize: documents={} pieces={}",
        report.documents, report.pieces
    );
    let digest = vocab.digest();
    write_sidecar(
        output,
        "tokenize",
        &digest_of(&digest),
        None,
        Some(&digest),
        report,
    )
}

/// Fails when a token file's sidecar names a different vocabulary.
fn check_token_provenance(tokens: &str, vocab: &SubwordVocab) -> Result<()> {
    if tokens == STDIO {
        return Ok(());
    }
    let Ok(text) = std::fs::read_to_string(sidecar_path(tokens)) else {
        log::warn!("no provenance sidecar for {tokens}; vocabulary match not verified");
        return Ok(());
    };
    let meta: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("unreadable sidecar for {tokens}: {e}")))?;
    match meta.get("vocab_digest").and_then(|v| v.as_str()) {
        Some(d) if d != vocab.digest() => Err(Error::config(format!(
            "{tokens} was tokenized with a different vocabulary"
        ))),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct PretrainReport {
    step: u64,
    steps_run: usize,
    /// Mean loss over the last (up to) 100 steps of this run.
    final_loss: Option<f64>,
}

pub fn pretrain_stage(
    tokens: &str,
    vocab_path: &Path,
    output: &str,
    model: &ModelSection,
    cfg: &TrainingConfig,
    resume: Option<&Path>,
) -> Result<()> {
    let vocab = load_vocab(vocab_path)?;
    check_token_provenance(tokens, &vocab)?;
    let mut docs = Vec::new();
    for_each_block(open_input(tokens)?, |block| {
        for line in block {
            docs.push(line_to_ids(line)?);
        }
        Ok(())
    })?;
    let resume = resume.map(Checkpoint::load).transpose()?;
    let model_cfg = match &resume {
        Some(ckpt) => ckpt.params().config.clone(),
        None => model.resolve(vocab.size(), cfg.max_seq_len)?,
    };
    let outcome = pretrain(&docs, &vocab, &model_cfg, cfg, resume)?;
    let tail = &outcome.losses[outcome.losses.len().saturating_sub(100)..];
    let report = PretrainReport {
        step: outcome.checkpoint.step(),
        steps_run: outcome.losses.len(),
        final_loss: (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64),
    };
    write_checkpoint(&outcome.checkpoint, output)?;
    if let Some(loss) = report.final_loss {
        eprintln!("pretrain: step {} final loss {loss:.4}", report.step);
    }
    let ckpt = &outcome.checkpoint;
    write_sidecar(
        output,
        "pretrain",
        &ckpt.config_digest(),
        Some(cfg.seed),
        Some(&ckpt.vocab_digest),
        report,
    )
}

fn write_checkpoint(ckpt: &Checkpoint, output: &str) -> Result<()> {
    let mut out = create_output(output)?;
    out.write_all(&ckpt.to_bytes())?;
    out.flush()?;
    Ok(())
}

fn load_matching(checkpoint: &Path, vocab_path: &Path) -> Result<(Checkpoint, SubwordVocab)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let vocab = load_vocab(vocab_path)?;
    if ckpt.vocab_digest != vocab.digest() {
        return Err(Error::config(format!(
            "{} was trained with a different vocabulary than {}",
            checkpoint.display(),
            vocab_path.display()
        )));
    }
    Ok((ckpt, vocab))
}

/// How a labeled dataset file is read.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: Option<DatasetFormat>,
    pub text_column: String,
    pub label_column: String,
}

impl DatasetSpec {
    fn load(&self) -> Result<crate::eval::LabeledDataset> {
        let format = self
            .format
            .unwrap_or_else(|| DatasetFormat::from_path(&self.path));
        load_dataset(&self.path, format, &self.text_column, &self.label_column)
    }
}

#[derive(Serialize)]
struct FinetuneReport {
    rows: usize,
    label_names: Vec<String>,
}

pub fn finetune_stage(
    checkpoint: &Path,
    vocab_path: &Path,
    dataset: &DatasetSpec,
    output: &str,
    cfg: &TrainingConfig,
) -> Result<()> {
    let (ckpt, vocab) = load_matching(checkpoint, vocab_path)?;
    let ds = dataset.load()?;
    let rows: Vec<(Vec<u32>, usize)> = ds.rows.iter().map(|(t, l)| (vocab.encode(t), *l)).collect();
    let params = finetune(ckpt.params(), &rows, ds.label_names.len(), cfg)?;
    let tuned = Checkpoint {
        training: cfg.clone(),
        vocab_digest: ckpt.vocab_digest.clone(),
        state: TrainState::new(params),
    };
    write_checkpoint(&tuned, output)?;
    eprintln!(
        "finetune: {} rows, {} classes",
        rows.len(),
        ds.label_names.len()
    );
    let report = FinetuneReport {
        rows: rows.len(),
        label_names: ds.label_names,
    };
    write_sidecar(
        output,
        "finetune",
        &tuned.config_digest(),
        Some(cfg.seed),
        Some(&tuned.vocab_digest),
        report,
    )
}

#[derive(Serialize)]
struct EvaluationFile<'a> {
    config_digest: &'a str,
    reports: &'a [EvalReport],
    table: &'a str,
}

/// Runs every dataset through the repeated fine-tuning protocol, prints the
/// table and optionally writes a JSON report.
pub fn evaluate(
    checkpoint: &Path,
    vocab_path: &Path,
    datasets: &[DatasetSpec],
    output: Option<&str>,
    cfg: &EvalConfig,
) -> Result<Vec<EvalReport>> {
    if datasets.is_empty() {
        return Err(Error::config("evaluate needs at least one dataset"));
    }
    let (ckpt, vocab) = load_matching(checkpoint, vocab_path)?;
    let mut reports = Vec::new();
    for spec in datasets {
        reports.push(run_task(&spec.load()?, &ckpt, &vocab, cfg)?);
    }
    let table = render_table(&reports)?;
    print!("{table}");
    if let Some(path) = output {
        let digest = cfg.digest();
        let file = EvaluationFile {
            config_digest: &digest,
            reports: &reports,
            table: &table,
        };
        let mut out = create_output(path)?;
        out.write_all(
            (serde_json::to_string_pretty(&file).expect("report serializes") + "\n").as_bytes(),
        )?;
        out.flush()?;
        write_sidecar(
            path,
            "evaluate",
            &digest,
            Some(cfg.finetune.seed),
            Some(&ckpt.vocab_digest),
            &reports,
        )?;
    }
    Ok(reports)
}
