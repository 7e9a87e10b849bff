//! Exact deduplication followed by seeded Bernoulli sampling, both streaming.
//!
//! ```text
//! cargo run --release --example dedup_sample [documents] [fraction] [seed]
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saudi_corpus::corpus::{dedup_stream, sample_stream};

fn main() -> saudi_corpus::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let fraction: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);

    // A stream in which roughly 30% of the lines repeat an earlier one.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs: Vec<String> = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && rng.gen_bool(0.3) {
            let j = rng.gen_range(0..docs.len());
            docs.push(docs[j].clone());
        } else {
            docs.push(format!("تغريدة رقم {i} عن الجو"));
        }
    }
    let input = docs.join("\n");

    let start = std::time::Instant::now();
    let mut unique = Vec::new();
    let dedup = dedup_stream(input.as_bytes(), &mut unique, 4)?;
    println!(
        "dedup: {} in, {} out, {} duplicates dropped ({:.1?})",
        dedup.input,
        dedup.output,
        dedup.duplicates_dropped,
        start.elapsed()
    );

    let mut sampled = Vec::new();
    let sample = sample_stream(unique.as_slice(), &mut sampled, fraction, seed)?;
    let expected = sample.input as f64 * fraction;
    let sigma = (sample.input as f64 * fraction * (1.0 - fraction)).sqrt();
    println!(
        "sample: kept {} of {} at p={fraction} (expected {expected:.0} ± {sigma:.0})",
        sample.kept, sample.input
    );

    let mut again = Vec::new();
    sample_stream(unique.as_slice(), &mut again, fraction, seed)?;
    println!("same seed, same sample: {}", again == sampled);
    Ok(())
}
