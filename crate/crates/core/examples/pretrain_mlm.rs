//! Overfits the desk-scale encoder on a 50-sentence corpus with the MLM
//! objective, then round-trips the checkpoint.
//!
//! ```text
//! cargo run --release --example pretrain_mlm [steps] [learning_rate] [vocab_size] [batch_size]
//! ```

use saudi_corpus::model::{pretrain, Checkpoint, ModelConfig, TrainingConfig};
use saudi_corpus::tokenizer::{train_unigram_from_lines, TrainerConfig};

const CORPUS: &str = include_str!("../tests/fixtures/toy_corpus.txt");

fn main() -> saudi_corpus::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let learning_rate: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5e-3);
    let vocab_size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let batch_size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);

    let lines: Vec<String> = CORPUS.lines().map(str::to_owned).collect();
    let (vocab, _) = train_unigram_from_lines(
        &lines,
        &TrainerConfig {
            vocab_size,
            ..TrainerConfig::default()
        },
    )?;
    let docs: Vec<Vec<u32>> = lines.iter().map(|l| vocab.encode(l)).collect();
    let pieces: usize = docs.iter().map(Vec::len).sum();
    println!(
        "{} sentences, {} pieces, vocabulary of {}",
        docs.len(),
        pieces,
        vocab.size()
    );

    let model = ModelConfig::desk(vocab.size());
    let cfg = TrainingConfig {
        learning_rate,
        steps,
        batch_size,
        weight_decay: 0.0,
        ..TrainingConfig::default()
    };
    let start = std::time::Instant::now();
    let outcome = pretrain(&docs, &vocab, &model, &cfg, None)?;
    for (i, chunk) in outcome.losses.chunks(100).enumerate() {
        let mean = chunk.iter().sum::<f64>() / chunk.len() as f64;
        println!(
            "steps {:>5}-{:<5} mean loss {mean:.4}",
            i * 100 + 1,
            i * 100 + chunk.len()
        );
    }
    println!(
        "trained {} steps in {:.1?}",
        outcome.checkpoint.step(),
        start.elapsed()
    );

    let path = std::env::temp_dir().join("pretrain_mlm_example.ckpt");
    outcome.checkpoint.save(&path)?;
    let reloaded = Checkpoint::load(&path)?;
    assert_eq!(reloaded, outcome.checkpoint);
    println!(
        "checkpoint {} ({} bytes) reloads bit-exactly",
        path.display(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0)
    );
    Ok(())
}
