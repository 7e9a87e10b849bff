//! Evaluation harness: labeled datasets, the 80/20 split, accuracy and
//! macro-F1, repeated fine-tuning runs and the results table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{finetune, predict, Checkpoint, TrainingConfig};
use crate::parallel::map_ordered;
use crate::tokenizer::SubwordVocab;

/// Texts with dense class ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub task_name: String,
    pub rows: Vec<(String, usize)>,
    pub label_names: Vec<String>,
}

impl LabeledDataset {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::validation(format!(
                "dataset {} has no rows",
                self.task_name
            )));
        }
        if self.label_names.len() < 2 {
            return Err(Error::validation(format!(
                "dataset {} has fewer than two labels",
                self.task_name
            )));
        }
        if let Some((_, bad)) = self.rows.iter().find(|(_, l)| *l >= self.label_names.len()) {
            return Err(Error::validation(format!("label id {bad} has no name")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            task_name: self.task_name.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            label_names: self.label_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Tsv,
}

impl DatasetFormat {
    fn delimiter(self) -> u8 {
        match self {
            DatasetFormat::Csv => b',',
            DatasetFormat::Tsv => b'\t',
        }
    }

    /// Guesses the format from a file extension (`.tsv` → TSV, else CSV).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => DatasetFormat::Tsv,
            _ => DatasetFormat::Csv,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DatasetFormat::Csv),
            "tsv" => Ok(DatasetFormat::Tsv),
            other => Err(Error::config(format!(
                "unknown dataset format {other:?} (expected csv or tsv)"
            ))),
        }
    }
}

/// Parses a delimited table with a header row.  Labels become dense ids in
/// order of first appearance.
pub fn parse_dataset<R: Read>(
    input: R,
    task_name: &str,
    format: DatasetFormat,
    text_column: &str,
    label_column: &str,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter())
        .from_reader(input);
    let headers = reader.headers().map_err(csv_error)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(format!("column {name:?} not found in {task_name}")))
    };
    let (text_idx, label_idx) = (column(text_column)?, column(label_column)?);
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut label_names = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let field = |i: usize| {
            record.get(i).ok_or_else(|| {
                Error::validation(format!("row {} is missing a column", rows.len() + 2))
            })
        };
        let text = field(text_idx)?.to_string();
        let label = field(label_idx)?.trim().to_string();
        let id = *ids.entry(label.clone()).or_insert_with(|| {
            label_names.push(label);
            label_names.len() - 1
        });
        rows.push((text, id));
    }
    if rows.is_empty() {
        return Err(Error::validation(format!("dataset {task_name} is empty")));
    }
    let ds = LabeledDataset {
        task_name: task_name.to_string(),
        rows,
        label_names,
    };
    ds.validate()?;
    Ok(ds)
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Stream(std::io::Error::other(e.to_string())),
        _ => Error::validation(format!("malformed dataset: {e}")),
    }
}

/// Reads a CSV/TSV dataset; the task is named after the file stem.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    text_column: &str,
    label_column: &str,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("task");
    parse_dataset(
        std::io::BufReader::new(file),
        name,
        format,
        text_column,
        label_column,
    )
}

/// Seeded uniform shuffle; the first `⌈0.8 n⌉` rows train, the rest validate.
pub fn split_80_20(ds: &LabeledDataset, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    check_splittable(ds)?;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = train_size(ds.len());
    Ok((ds.subset(&order[..cut]), ds.subset(&order[cut..])))
}

/// Like [`split_80_20`] but splits every class separately, so each class
/// keeps `⌈0.8 n_c⌉` training rows.
pub fn split_stratified(
    ds: &LabeledDataset,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    check_splittable(ds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in 0..ds.label_names.len() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.rows[i].1 == class).collect();
        members.shuffle(&mut rng);
        let cut = train_size(members.len());
        train.extend_from_slice(&members[..cut]);
        valid.extend_from_slice(&members[cut..]);
    }
    train.shuffle(&mut rng);
    valid.shuffle(&mut rng);
    Ok((ds.subset(&train), ds.subset(&valid)))
}

fn train_size(n: usize) -> usize {
    (n * 4).div_ceil(5)
}

fn check_splittable(ds: &LabeledDataset) -> Result<()> {
    if ds.len() < 5 {
        return Err(Error::validation(format!(
            "need at least 5 rows to split, got {}",
            ds.len()
        )));
    }
    Ok(())
}

fn check_lengths(preds: &[usize], labels: &[usize]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::validation("no predictions to score"));
    }
    Ok(())
}

/// Share of predictions equal to their label.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    check_lengths(preds, labels)?;
    let correct = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Precision, recall and F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Unweighted mean of per-class F1 over all `num_classes` classes.  Any
/// precision, recall or F1 with a zero denominator counts as 0.
pub fn macro_f1(
    preds: &[usize],
    labels: &[usize],
    num_classes: usize,
) -> Result<(f64, Vec<ClassMetrics>)> {
    check_lengths(preds, labels)?;
    if num_classes == 0 {
        return Err(Error::validation("num_classes must be positive"));
    }
    if let Some(bad) = preds.iter().chain(labels).find(|&&c| c >= num_classes) {
        return Err(Error::validation(format!(
            "class {bad} is outside {num_classes} classes"
        )));
    }
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut actual = vec![0usize; num_classes];
    for (&p, &l) in preds.iter().zip(labels) {
        predicted[p] += 1;
        actual[l] += 1;
        if p == l {
            tp[p] += 1;
        }
    }
    let per_class: Vec<ClassMetrics> = (0..num_classes)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], actual[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: actual[c],
            }
        })
        .collect();
    let mean = per_class.iter().map(|m| m.f1).sum::<f64>() / num_classes as f64;
    Ok((mean, per_class))
}

/// Settings of one evaluation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Fine-tuning runs, each with its own seed.
    pub repeats: usize,
    /// Seed of the train/validation split, shared by all runs.
    pub split_seed: u64,
    pub stratified: bool,
    pub finetune: TrainingConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            repeats: 3,
            split_seed: 42,
            stratified: false,
            finetune: TrainingConfig {
                batch_size: 64,
                ..TrainingConfig::default()
            },
        }
    }
}

impl EvalConfig {
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Outcome of one fine-tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// The best of the repeated runs, plus every run for the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task_name: String,
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Always `"macro"`: F1 is the unweighted mean over classes.
    pub f1_average: String,
    pub per_class: Vec<ClassMetrics>,
    pub label_names: Vec<String>,
    pub n_validation: usize,
    pub seed: u64,
    pub runs: Vec<RunResult>,
    pub config_digest: String,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fine-tunes `repeats` times with distinct seeds on the shared training
/// split and reports the run with the highest validation macro-F1 (the
/// earliest on ties).
pub fn run_task(
    ds: &LabeledDataset,
    checkpoint: &Checkpoint,
    vocab: &SubwordVocab,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    ds.validate()?;
    if cfg.repeats == 0 {
        return Err(Error::config("repeats must be at least 1"));
    }
    if checkpoint.vocab_digest != vocab.digest() {
        return Err(Error::config(
            "checkpoint was trained with a different vocabulary",
        ));
    }
    let (train, valid) = if cfg.stratified {
        split_stratified(ds, cfg.split_seed)?
    } else {
        split_80_20(ds, cfg.split_seed)?
    };
    let encode = |d: &LabeledDataset| -> Vec<(Vec<u32>, usize)> {
        d.rows
            .iter()
            .map(|(text, label)| (vocab.encode(text), *label))
            .collect()
    };
    let train_ids = encode(&train);
    let valid_ids = encode(&valid);
    let labels: Vec<usize> = valid_ids.iter().map(|(_, l)| *l).collect();
    let num_classes = ds.label_names.len();
    let seeds: Vec<u64> = (0..cfg.repeats as u64)
        .map(|r| cfg.finetune.seed.wrapping_add(r))
        .collect();

    let outcomes = map_ordered(&seeds, |&seed| -> Result<(RunResult, Vec<ClassMetrics>)> {
        let run_cfg = TrainingConfig {
            seed,
            ..cfg.finetune.clone()
        };
        let tuned = finetune(checkpoint.params(), &train_ids, num_classes, &run_cfg)?;
        let preds = valid_ids
            .iter()
            .map(|(ids, _)| predict(&tuned, ids))
            .collect::<Result<Vec<_>>>()?;
        let acc = accuracy(&preds, &labels)?;
        let (f1, per_class) = macro_f1(&preds, &labels, num_classes)?;
        log::info!(
            "{} seed {seed}: accuracy {acc:.4} macro-F1 {f1:.4}",
            ds.task_name
        );
        Ok((
            RunResult {
                seed,
                accuracy: acc,
                macro_f1: f1,
            },
            per_class,
        ))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (run, _)) in outcomes.iter().enumerate() {
        if run.macro_f1 > outcomes[best].0.macro_f1 {
            best = i;
        }
    }
    let (best_run, per_class) = outcomes[best].clone();
    Ok(EvalReport {
        task_name: ds.task_name.clone(),
        accuracy: best_run.accuracy,
        macro_f1: best_run.macro_f1,
        f1_average: "macro".to_string(),
        per_class,
        label_names: ds.label_names.clone(),
        n_validation: valid.len(),
        seed: best_run.seed,
        runs: outcomes.into_iter().map(|(r, _)| r).collect(),
        config_digest: cfg.digest(),
    })
}

/// A fraction as a percentage with two decimals.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}

const TABLE_HEADER: &str = "Acc. / F1";

/// One row per task with `Acc. / F1` percentages, then an `Avg.` row holding
/// the unweighted mean of the unrounded scores.
pub fn render_table(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::validation("no reports to tabulate"));
    }
    let n = reports.len() as f64;
    let avg_acc = reports.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let avg_f1 = reports.iter().map(|r| r.macro_f1).sum::<f64>() / n;
    let mut rows: Vec<(String, String)> = reports
        .iter()
        .map(|r| {
            (
                r.task_name.clone(),
                format!(
                    "{} / {}",
                    format_percent(r.accuracy),
                    format_percent(r.macro_f1)
                ),
            )
        })
        .collect();
    rows.push((
        "Avg.".to_string(),
        format!("{} / {}", format_percent(avg_acc), format_percent(avg_f1)),
    ));
    let name_width = rows
        .iter()
        .map(|(name, _)| name.chars().count())
        .max()
        .unwrap_or(0)
        .max("Task".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<name_width$} | {TABLE_HEADER}", "Task");
    let _ = writeln!(
        out,
        "{}-+-{}",
        "-".repeat(name_width),
        "-".repeat(TABLE_HEADER.len() + 4)
    );
    for (name, cell) in rows {
        let pad = name_width - name.chars().count();
        let _ = writeln!(out, "{name}{} | {cell}", " ".repeat(pad));
    }
    Ok(out)
}

/// Reads a table produced by [`render_table`] back into
/// `(task, accuracy %, F1 %)` rows, the `Avg.` row included.
pub fn parse_table(table: &str) -> Result<Vec<(String, f64, f64)>> {
    let mut out = Vec::new();
    for line in table.lines().skip(2) {
        if line.trim().is_empty() {
            continue;
        }
        let (name, cell) = line
            .rsplit_once(" | ")
            .ok_or_else(|| Error::validation(format!("malformed table row {line:?}")))?;
        let (acc, f1) = cell
            .split_once(" / ")
            .ok_or_else(|| Error::validation(format!("malformed table cell {cell:?}")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::validation(format!("not a number: {s:?}")))
        };
        out.push((name.trim_end().to_string(), num(acc)?, num(f1)?));
    }
    Ok(out)
}
