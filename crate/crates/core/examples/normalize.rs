//! Matching-mode normalization of dialect spellings, step by step.
//!
//! ```text
//! cargo run --example normalize [text...]
//! ```

use saudi_corpus::normalize::{
    cap_repetitions, collapse_whitespace, fold_latin, normalize_for_matching, strip_diacritics,
    strip_tatweel, unify_alif, NormalizationConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples = if args.is_empty() {
        vec![
            "الرِّيَاض".to_string(),
            "جـــــدة   الحلوة".to_string(),
            "إحساس أجمل من آخر".to_string(),
            "Ｒｉｙａｄｈ, Saudi Arabia 🇸🇦".to_string(),
            "هههههههههه 😂😂😂😂😂😂".to_string(),
        ]
    } else {
        vec![args.join(" ")]
    };

    let cfg = NormalizationConfig::matching();
    for text in &samples {
        println!("input           {text:?}");
        println!("  diacritics    {:?}", strip_diacritics(text));
        println!("  tatweel       {:?}", strip_tatweel(text));
        println!("  alif          {:?}", unify_alif(text));
        println!("  latin fold    {:?}", fold_latin(text));
        println!(
            "  rep. caps     {:?}",
            collapse_whitespace(&cap_repetitions(text, 5, 4))
        );
        println!("  matching form {:?}\n", normalize_for_matching(text, &cfg));
    }
}
