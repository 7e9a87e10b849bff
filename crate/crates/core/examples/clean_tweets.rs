//! Cleans a small tweet stream and shows why each document was kept or
//! dropped.
//!
//! ```text
//! cargo run --example clean_tweets [min_words]
//! ```

use saudi_corpus::clean::{clean_tweet_stream, CleanConfig, Cleaner, Document};

const TWEETS: &str = r##"{"id":"1","text":"@user_1 والله الجو اليوم حلوووووووو 😂😂😂😂😂😂 https://t.co/abc"}
{"id":"2","text":"#الرياض_الآن زحمة"}
{"id":"3","text":"the match tonight was really amazing يا"}
{"id":"4","text":"تواصلوا معنا على info@shop.sa أو 0551234567 وشكرًا"}
{"id":"5","text":"https://t.co/xyz @someone"}
{"id":"6","text":"not json"##;

fn main() -> saudi_corpus::Result<()> {
    let min_words = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let cleaner = Cleaner::new(CleanConfig {
        min_words,
        ..CleanConfig::default()
    })?;

    for line in TWEETS.lines().take(5) {
        let v: serde_json::Value = serde_json::from_str(line).expect("valid sample");
        let doc = Document::tweet(
            v["id"].as_str().unwrap_or(""),
            v["text"].as_str().unwrap_or(""),
        );
        let (cleaned, decision) = cleaner.clean_document(&doc);
        println!(
            "{} {:?}\n  -> {:?} ({:?})",
            doc.doc_id, doc.text, cleaned.text, decision.reason
        );
    }

    let (mut kept, mut rejected) = (Vec::new(), Vec::new());
    let report = clean_tweet_stream(&cleaner, TWEETS.as_bytes(), &mut kept, &mut rejected)?;
    println!("\ncorpus:\n{}", String::from_utf8_lossy(&kept));
    println!("rejection log:\n{}", String::from_utf8_lossy(&rejected));
    println!("{}", report.to_text());
    Ok(())
}
