//! Trains a unigram vocabulary, prints the EM trace and segments a few
//! sentences.
//!
//! ```text
//! cargo run --release --example train_tokenizer [vocab_size]
//! ```

use saudi_corpus::tokenizer::{train_unigram_from_lines, TrainerConfig};

const CORPUS: &str = include_str!("../tests/fixtures/toy_corpus.txt");

fn main() -> saudi_corpus::Result<()> {
    let vocab_size = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(150);
    let lines: Vec<&str> = CORPUS.lines().collect();
    let cfg = TrainerConfig {
        vocab_size,
        ..TrainerConfig::default()
    };
    let (vocab, trace) = train_unigram_from_lines(&lines, &cfg)?;

    for (round, (losses, size)) in trace.rounds.iter().zip(&trace.sizes).enumerate() {
        let losses: Vec<String> = losses.iter().map(|l| format!("{l:.4}")).collect();
        println!(
            "round {round:>2}: {size:>4} pieces, loss per word {}",
            losses.join(" → ")
        );
    }
    println!(
        "\nfinal vocabulary: {} pieces (specials included)\n",
        vocab.size()
    );

    for line in lines.iter().take(4) {
        let ids = vocab.encode(line);
        let pieces: Vec<&str> = ids.iter().filter_map(|&id| vocab.surface(id)).collect();
        println!("{line}\n  {}\n  {:?}", pieces.join(" "), ids);
        assert_eq!(vocab.decode(&ids)?, *line);
    }
    println!("\ndigest {}", vocab.digest());
    Ok(())
}
