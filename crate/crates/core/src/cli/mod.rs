//! The `saudi-corpus` command line: one subcommand per stage plus
//! `pipeline`, which runs them in order from a TOML config.
//!
//! Precedence is flag > config file > built-in default.  Exit codes: 0 on
//! success, 1 for usage, configuration or validation errors, 2 for I/O
//! errors.

pub mod config;
pub mod stages;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::DatasetFormat;
use crate::model::TrainingConfig;
use config::{PipelineConfig, Preset};
use stages::DatasetSpec;

#[derive(Debug, Parser)]
#[command(
    name = "saudi-corpus",
    version,
    about = "Saudi-dialect corpus pipeline, unigram tokenizer and small BERT-style encoder",
    after_help = "Use `-` as a path for standard input or output. Each written artifact gets a \
                  `<output>.meta.json` sidecar with the tool version, config digest and seed."
)]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads, 0 for one per core; outputs are identical for any value
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub threads: usize,

    /// Seed of every seeded stage [default: 42, or `seed` from the config]
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// More logging (-v progress, -vv debug)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep tweets whose country code is SA or whose location names a Saudi place
    GeoFilter(GeoFilterArgs),
    /// Clean tweets and forum pages into a one-document-per-line corpus
    Clean(CleanArgs),
    /// Drop exact duplicate documents, keeping first occurrences
    Dedup(DedupArgs),
    /// Keep each document independently with a fixed probability
    Sample(SampleArgs),
    /// Count documents, words, sentences and bytes
    Stats(StatsArgs),
    /// Train a unigram subword vocabulary
    TokenizerTrain(TokenizerTrainArgs),
    /// Encode a corpus as lines of piece ids
    Tokenize(TokenizeArgs),
    /// Pretrain the encoder with masked-token prediction
    Pretrain(PretrainArgs),
    /// Fine-tune a pretrained checkpoint as a classifier
    Finetune(FinetuneArgs),
    /// Repeated fine-tuning on 80/20 splits; prints Accuracy and macro-F1
    Evaluate(EvaluateArgs),
    /// Run geo-filter, clean, dedup, [sample], stats, tokenizer-train, tokenize and pretrain
    Pipeline,
}

#[derive(Debug, Args)]
pub struct GeoFilterArgs {
    /// Tweet records, one JSON object per line
    #[arg(default_value = "-")]
    pub input: String,
    /// Selected records
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Location term list, one term per line [default: the bundled list]
    #[arg(long, value_name = "PATH")]
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Tweet records (JSONL), e.g. the geo-filter output
    pub input: Option<String>,
    /// Directory of forum pages (*.html) cleaned after the tweets
    #[arg(long, value_name = "DIR")]
    pub forum_dir: Option<PathBuf>,
    /// Cleaned corpus, one document per line
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Rejected documents as {doc_id, reason} JSONL
    #[arg(long, value_name = "PATH")]
    pub rejected: Option<String>,
    /// Drop documents with fewer words after cleaning [default: 3]
    #[arg(long, value_name = "N")]
    pub min_words: Option<usize>,
    /// Drop documents whose Latin share of letters exceeds this [default: 0.5]
    #[arg(long, value_name = "RATIO")]
    pub english_ratio: Option<f64>,
    /// Remove digit runs longer than this [default: 7]
    #[arg(long, value_name = "N")]
    pub max_digit_run: Option<usize>,
    /// Cap on consecutive repeats of a letter [default: 5]
    #[arg(long, value_name = "N")]
    pub letter_cap: Option<usize>,
    /// Cap on consecutive repeats of any other character or emoji [default: 4]
    #[arg(long, value_name = "N")]
    pub other_cap: Option<usize>,
    /// Keep hashtag words, dropping only the `#` sign [default: drop the whole tag]
    #[arg(long)]
    pub keep_hashtag_text: bool,
    /// CSS selector of forum post containers; repeatable
    /// [default: div.post, div.reply, blockquote.postcontent]
    #[arg(long = "post-selector", value_name = "CSS")]
    pub post_selectors: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// One-document-per-line corpus
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Digest partitions; the output does not depend on it [default: 1]
    #[arg(long, value_name = "N")]
    pub shards: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(default_value = "-")]
    pub input: String,
    #[arg(short, long, default_value = "-")]
    pub output: String,
    /// Probability of keeping each document, in (0, 1] [required unless set in the config]
    #[arg(long, value_name = "P")]
    pub fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(default_value = "-")]
    pub input: String,
    /// Where to write the JSON counts
    #[arg(short, long, default_value = "-")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct TokenizerTrainArgs {
    /// One-document-per-line corpus
    #[arg(default_value = "-")]
    pub input: String,
    /// Vocabulary file (surface<TAB>logprob per line)
    #[arg(short, long)]
    pub output: String,
    /// Final vocabulary size, special tokens included [default: 75000]
    #[arg(long, value_name = "N")]
    pub vocab_size: Option<usize>,
    /// Share of character occurrences the alphabet must cover [default: 0.9995]
    #[arg(long, value_name = "RATIO")]
    pub character_coverage: Option<f64>,
    /// EM iterations per pruning round [default: 2]
    #[arg(long, value_name = "N")]
    pub em_iters: Option<usize>,
    /// Share of pieces kept by each pruning round [default: 0.75]
    #[arg(long, value_name = "RATIO")]
    pub shrink_factor: Option<f64>,
    /// Longest candidate piece in characters [default: 8]
    #[arg(long, value_name = "N")]
    pub max_piece_len: Option<usize>,
    /// Seed candidates per final piece [default: 4]
    #[arg(long, value_name = "N")]
    pub seed_factor: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    #[arg(default_value = "-")]
    pub input: String,
    /// Vocabulary from tokenizer-train
    #[arg(long, value_name = "PATH")]
    pub vocab: PathBuf,
    #[arg(short, long, default_value = "-")]
    pub output: String,
}

/// Optimisation flags shared by pretraining and fine-tuning.
#[derive(Debug, Args)]
pub struct TrainFlags {
    /// Share of ordinary pieces selected for prediction [default: 0.15]
    #[arg(long, value_name = "RATIO")]
    pub mask_fraction: Option<f64>,
    /// Longest sequence including CLS and SEP [default: 128]
    #[arg(long, value_name = "N")]
    pub max_seq_len: Option<usize>,
    /// Sequences per step [default: 8 for pretraining, 64 for fine-tuning; 256 at full scale]
    #[arg(long, value_name = "N")]
    pub batch_size: Option<usize>,
    /// AdamW learning rate [default: 5e-5]
    #[arg(long, value_name = "LR")]
    pub learning_rate: Option<f64>,
    /// Decoupled AdamW weight decay [default: 0.01]
    #[arg(long, value_name = "W")]
    pub weight_decay: Option<f64>,
}

impl TrainFlags {
    fn apply(&self, cfg: &mut TrainingConfig) {
        if let Some(v) = self.mask_fraction {
            cfg.mask_fraction = v;
        }
        if let Some(v) = self.max_seq_len {
            cfg.max_seq_len = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    /// Token-id corpus from `tokenize`
    pub tokens: String,
    #[arg(long, value_name = "PATH")]
    pub vocab: PathBuf,
    /// Checkpoint to write
    #[arg(short, long)]
    pub output: String,
    /// Continue from this checkpoint
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,
    /// Total optimizer steps, counting steps already in a resumed checkpoint [default: 1000]
    #[arg(long, value_name = "N")]
    pub steps: Option<u64>,
    /// Model size preset [default: desk]
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Encoder layers [default: from the preset]
    #[arg(long, value_name = "N")]
    pub layers: Option<usize>,
    /// Attention heads [default: from the preset]
    #[arg(long, value_name = "N")]
    pub heads: Option<usize>,
    /// Hidden width [default: from the preset]
    #[arg(long, value_name = "N")]
    pub d_model: Option<usize>,
    /// Feed-forward width [default: from the preset]
    #[arg(long, value_name = "N")]
    pub d_ff: Option<usize>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset format [default: from the file extension]
    #[arg(long, value_name = "csv|tsv")]
    pub format: Option<DatasetFormat>,
    /// Column holding the text
    #[arg(long, default_value = "text")]
    pub text_column: String,
    /// Column holding the label
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

impl DatasetArgs {
    fn spec(&self, path: &Path) -> DatasetSpec {
        DatasetSpec {
            path: path.to_path_buf(),
            format: self.format,
            text_column: self.text_column.clone(),
            label_column: self.label_column.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    /// Labeled CSV/TSV with a header row
    pub dataset: PathBuf,
    /// Pretrained checkpoint
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub vocab: PathBuf,
    /// Classifier checkpoint to write
    #[arg(short, long)]
    pub output: String,
    /// Passes over the dataset [default: 3]
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled CSV/TSV files, one task each
    #[arg(required = true)]
    pub datasets: Vec<PathBuf>,
    /// Pretrained checkpoint
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub vocab: PathBuf,
    /// JSON report with every run
    #[arg(short, long)]
    pub output: Option<String>,
    /// Fine-tuning runs per task; the best macro-F1 is reported [default: 3]
    #[arg(long, value_name = "N")]
    pub repeats: Option<usize>,
    /// Split each class 80/20 separately [default: plain random split]
    #[arg(long)]
    pub stratified: bool,
    /// Passes over the training split [default: 3]
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub train: TrainFlags,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load_or_default(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    crate::parallel::with_threads(cli.threads, || dispatch(&cli.command, &cfg))?
}

fn dispatch(command: &Command, cfg: &PipelineConfig) -> Result<()> {
    match command {
        Command::GeoFilter(a) => {
            let terms = a.terms.as_deref().or(cfg.geo_filter.terms.as_deref());
            stages::geo_filter(&a.input, &a.output, terms)
        }
        Command::Clean(a) => {
            let mut clean = cfg.clean.clone();
            override_clean(&mut clean, a);
            stages::clean(
                a.input.as_deref(),
                a.forum_dir.as_deref(),
                &a.output,
                a.rejected.as_deref(),
                &clean,
            )
        }
        Command::Dedup(a) => {
            stages::dedup(&a.input, &a.output, a.shards.unwrap_or(cfg.dedup.shards))
        }
        Command::Sample(a) => {
            let fraction = a.fraction.or(cfg.sample.fraction).ok_or_else(|| {
                Error::config("sample needs --fraction (or [sample] fraction in the config)")
            })?;
            stages::sample(&a.input, &a.output, fraction, cfg.seed)
        }
        Command::Stats(a) => stages::stats(&a.input, &a.output).map(|_| ()),
        Command::TokenizerTrain(a) => {
            let mut t = cfg.tokenizer.clone();
            if let Some(v) = a.vocab_size {
                t.vocab_size = v;
            }
            if let Some(v) = a.character_coverage {
                t.character_coverage = v;
            }
            if let Some(v) = a.em_iters {
                t.em_iters = v;
            }
            if let Some(v) = a.shrink_factor {
                t.shrink_factor = v;
            }
            if let Some(v) = a.max_piece_len {
                t.max_piece_len = v;
            }
            if let Some(v) = a.seed_factor {
                t.seed_factor = v;
            }
            stages::tokenizer_train(&a.input, &a.output, &t)
        }
        Command::Tokenize(a) => stages::tokenize(&a.input, &a.vocab, &a.output),
        Command::Pretrain(a) => {
            let mut train = cfg.pretrain_config();
            a.train.apply(&mut train);
            if let Some(v) = a.steps {
                train.steps = v;
            }
            let mut model = cfg.model.clone();
            if let Some(p) = a.preset {
                model.preset = p;
            }
            model.layers = a.layers.or(model.layers);
            model.heads = a.heads.or(model.heads);
            model.d_model = a.d_model.or(model.d_model);
            model.d_ff = a.d_ff.or(model.d_ff);
            stages::pretrain_stage(
                &a.tokens,
                &a.vocab,
                &a.output,
                &model,
                &train,
                a.resume.as_deref(),
            )
        }
        Command::Finetune(a) => {
            let mut train = cfg.eval_config().finetune;
            a.train.apply(&mut train);
            if let Some(v) = a.epochs {
                train.epochs = v;
            }
            stages::finetune_stage(
                &a.checkpoint,
                &a.vocab,
                &a.data.spec(&a.dataset),
                &a.output,
                &train,
            )
        }
        Command::Evaluate(a) => {
            let mut eval = cfg.eval_config();
            a.train.apply(&mut eval.finetune);
            if let Some(v) = a.epochs {
                eval.finetune.epochs = v;
            }
            if let Some(v) = a.repeats {
                eval.repeats = v;
            }
            eval.stratified |= a.stratified;
            let specs: Vec<DatasetSpec> = a.datasets.iter().map(|p| a.data.spec(p)).collect();
            stages::evaluate(&a.checkpoint, &a.vocab, &specs, a.output.as_deref(), &eval)
                .map(|_| ())
        }
        Command::Pipeline => run_pipeline(cfg),
    }
}

fn override_clean(clean: &mut crate::clean::CleanConfig, a: &CleanArgs) {
    if let Some(v) = a.min_words {
        clean.min_words = v;
    }
    if let Some(v) = a.english_ratio {
        clean.english_ratio_threshold = v;
    }
    if let Some(v) = a.max_digit_run {
        clean.max_digit_run = v;
    }
    if let Some(v) = a.letter_cap {
        clean.letter_rep_cap = v;
    }
    if let Some(v) = a.other_cap {
        clean.other_rep_cap = v;
    }
    if a.keep_hashtag_text {
        clean.remove_hashtag_text = false;
    }
    if !a.post_selectors.is_empty() {
        clean.post_selectors = a.post_selectors.clone();
    }
}

/// File names of the pipeline's artifacts inside `output_dir`.
pub mod artifacts {
    pub const GEO: &str = "geo.jsonl";
    pub const CLEAN: &str = "clean.txt";
    pub const REJECTED: &str = "rejected.jsonl";
    pub const DEDUP: &str = "dedup.txt";
    pub const SAMPLE: &str = "sample.txt";
    pub const STATS: &str = "stats.json";
    pub const VOCAB: &str = "vocab.txt";
    pub const TOKENS: &str = "tokens.txt";
    pub const MODEL: &str = "model.ckpt";
}

fn path_str(p: &Path) -> Result<String> {
    p.to_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::config(format!("path {} is not UTF-8", p.display())))
}

fn require_exists(p: &Path, what: &str) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::io(
            p,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} not found")),
        ))
    }
}

/// filter → clean → dedup → [sample] → stats → tokenizer → tokenize → pretrain
fn run_pipeline(cfg: &PipelineConfig) -> Result<()> {
    let paths = &cfg.paths;
    let out_dir = paths
        .output_dir
        .as_deref()
        .ok_or_else(|| Error::config("pipeline needs [paths] output_dir"))?;
    if paths.tweets.is_none() && paths.forum_dir.is_none() {
        return Err(Error::config(
            "pipeline needs [paths] tweets, forum_dir, or both",
        ));
    }
    if let Some(t) = &paths.tweets {
        require_exists(t, "tweet input")?;
    }
    if let Some(d) = &paths.forum_dir {
        require_exists(d, "forum directory")?;
    }
    if let Some(t) = &cfg.geo_filter.terms {
        require_exists(t, "term list")?;
    }
    cfg.clean.validate()?;
    cfg.tokenizer.validate()?;
    cfg.pretrain_config().validate()?;
    if let Some(p) = cfg.sample.fraction {
        crate::corpus::check_fraction(p)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let at = |name: &str| path_str(&out_dir.join(name));

    let geo = match &paths.tweets {
        Some(tweets) => {
            let geo = at(artifacts::GEO)?;
            stages::geo_filter(&path_str(tweets)?, &geo, cfg.geo_filter.terms.as_deref())?;
            Some(geo)
        }
        None => None,
    };
    let clean = at(artifacts::CLEAN)?;
    stages::clean(
        geo.as_deref(),
        paths.forum_dir.as_deref(),
        &clean,
        Some(&at(artifacts::REJECTED)?),
        &cfg.clean,
    )?;
    let dedup = at(artifacts::DEDUP)?;
    stages::dedup(&clean, &dedup, cfg.dedup.shards)?;
    let corpus = match cfg.sample.fraction {
        Some(p) => {
            let sample = at(artifacts::SAMPLE)?;
            stages::sample(&dedup, &sample, p, cfg.seed)?;
            sample
        }
        None => dedup,
    };
    let stats = stages::stats(&corpus, &at(artifacts::STATS)?)?;
    eprintln!("corpus: {}", stats.to_json());
    let vocab = at(artifacts::VOCAB)?;
    stages::tokenizer_train(&corpus, &vocab, &cfg.tokenizer)?;
    let tokens = at(artifacts::TOKENS)?;
    stages::tokenize(&corpus, Path::new(&vocab), &tokens)?;
    stages::pretrain_stage(
        &tokens,
        Path::new(&vocab),
        &at(artifacts::MODEL)?,
        &cfg.model,
        &cfg.pretrain_config(),
        None,
    )
}
