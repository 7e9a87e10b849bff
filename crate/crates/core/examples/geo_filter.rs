//! Selects Saudi tweets by country code or by a Saudi place named in the
//! free-text location, and reports which rule fired.
//!
//! ```text
//! cargo run --example geo_filter
//! ```

use saudi_corpus::geo_filter::{filter_records, match_record, TermList, TweetRecord};

fn tweet(id: &str, location: Option<&str>, country_code: Option<&str>) -> TweetRecord {
    TweetRecord {
        id: id.into(),
        text: "صباح الخير".into(),
        location: location.map(Into::into),
        country_code: country_code.map(Into::into),
    }
}

fn main() -> saudi_corpus::Result<()> {
    let terms = TermList::builtin();
    println!("{} bundled location terms\n", terms.size());

    let records = vec![
        tweet("1", None, Some("SA")),
        tweet("2", Some("الرياض - حي النخيل"), None),
        tweet("3", Some("JEDDAH 🌊"), None),
        tweet("4", Some("Dubai"), Some("AE")),
        tweet("5", Some("مكه المكرمه"), Some("EG")),
        tweet("6", Some("somewhere over the rainbow"), None),
        tweet("7", None, None),
    ];
    for rec in &records {
        let m = match_record(rec, &terms);
        println!(
            "{:<2} location={:<28} code={:<6} -> {:<5} via {:?} {}",
            rec.id,
            format!("{:?}", rec.location.as_deref().unwrap_or("")),
            rec.country_code.as_deref().unwrap_or("-"),
            m.matched,
            m.source,
            m.matched_term.map(|t| format!("({t})")).unwrap_or_default()
        );
    }

    let custom = TermList::parse("القطيف\nqatif\n", "inline")?;
    let (kept, report) = filter_records(
        &[tweet("8", Some("Qatif, Eastern Province"), None)],
        &custom,
    );
    println!(
        "\ncustom list: kept {} record(s); {}",
        kept.len(),
        report.to_text()
    );
    Ok(())
}
