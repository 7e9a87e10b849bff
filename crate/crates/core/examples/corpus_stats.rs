//! Document, word, sentence and byte counts of a one-document-per-line corpus.
//!
//! ```text
//! cargo run --example corpus_stats [corpus.txt]
//! ```

use saudi_corpus::corpus::{compute_stats, sentence_count, stats_from_reader};

const CORPUS: &str = include_str!("../tests/fixtures/toy_corpus.txt");

fn main() -> saudi_corpus::Result<()> {
    let stats = match std::env::args().nth(1) {
        Some(path) => compute_stats(path.as_ref())?,
        None => {
            for line in CORPUS.lines().take(3) {
                println!("{} sentence(s): {line}", sentence_count(line));
            }
            stats_from_reader(CORPUS.as_bytes())?
        }
    };
    println!("{}", stats.to_json());
    println!(
        "{:.1} words per document, {:.1} bytes per word",
        stats.words as f64 / stats.documents.max(1) as f64,
        stats.bytes as f64 / stats.words.max(1) as f64
    );
    Ok(())
}
