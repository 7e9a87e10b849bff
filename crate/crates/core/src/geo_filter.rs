//! Selection of Saudi tweets by place country code and profile location.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use aho_corasick::{AhoCorasick, MatchKind};
use serde::{Deserialize, Serialize};

use crate::chars;
use crate::error::{Error, Result};
use crate::normalize::{normalize_for_matching, NormalizationConfig};
use crate::parallel;

/// Seed list shipped with the crate (`data/saudi_terms.txt`).
pub const DEFAULT_TERMS: &str = include_str!("../data/saudi_terms.txt");

/// Terms with fewer letters than this only match on word boundaries.
pub const SUBSTRING_MIN_LETTERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub country_code: Option<String>,
}

impl TweetRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::validation("record id is empty"));
        }
        if let Some(cc) = &self.country_code {
            if cc.chars().count() != 2 {
                return Err(Error::validation(format!(
                    "record {}: country_code {cc:?} is not 2 characters",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Parses one JSONL line; unknown fields are ignored.
    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: TweetRecord = serde_json::from_str(line)
            .map_err(|e| Error::validation(format!("bad record: {e}")))?;
        rec.validate()?;
        Ok(rec)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Debug, Clone)]
pub struct TermList {
    terms: Vec<String>,
    letters: Vec<usize>,
    matcher: AhoCorasick,
    pub source_path: String,
    /// Lines that normalized to nothing.
    pub rejected_lines: usize,
}

impl TermList {
    /// Normalizes and deduplicates `raw` terms, keeping first-seen order.
    pub fn from_terms<I, S>(raw: I, source_path: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cfg = NormalizationConfig::matching();
        let mut seen = HashSet::new();
        let mut terms = Vec::new();
        let mut rejected = 0;
        for t in raw {
            let norm = normalize_for_matching(t.as_ref(), &cfg);
            if norm.is_empty() {
                rejected += 1;
                continue;
            }
            if seen.insert(norm.clone()) {
                terms.push(norm);
            }
        }
        if terms.is_empty() {
            return Err(Error::config(format!(
                "term list {source_path} has no usable terms"
            )));
        }
        if rejected > 0 {
            log::warn!("{source_path}: {rejected} term line(s) empty after normalization");
        }
        let letters = terms
            .iter()
            .map(|t| t.chars().filter(|&c| chars::is_letter(c)).count())
            .collect();
        let matcher = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .build(&terms)
            .map_err(|e| Error::config(format!("term automaton: {e}")))?;
        Ok(TermList {
            terms,
            letters,
            matcher,
            source_path: source_path.to_string(),
            rejected_lines: rejected,
        })
    }

    /// Parses the term-file format: one term per line, `#` starts a comment line.
    pub fn parse(contents: &str, source_path: &str) -> Result<Self> {
        let lines = contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        Self::from_terms(lines, source_path)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_TERMS, "<builtin>").expect("builtin term list is valid")
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn size(&self) -> usize {
        self.terms.len()
    }
}

pub fn load_term_list(path: &Path) -> Result<TermList> {
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TermList::parse(&contents, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchSource {
    CountryCode,
    LocationTerm,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub matched: bool,
    pub matched_term: Option<String>,
    pub source: MatchSource,
}

impl MatchResult {
    fn none() -> Self {
        MatchResult {
            matched: false,
            matched_term: None,
            source: MatchSource::None,
        }
    }
}

pub fn match_country_code(rec: &TweetRecord) -> MatchResult {
    match &rec.country_code {
        Some(cc) if cc.eq_ignore_ascii_case("SA") => MatchResult {
            matched: true,
            matched_term: None,
            source: MatchSource::CountryCode,
        },
        _ => MatchResult::none(),
    }
}

fn is_boundary(text: &str, byte_idx: usize, before: bool) -> bool {
    let c = if before {
        text[..byte_idx].chars().next_back()
    } else {
        text[byte_idx..].chars().next()
    };
    match c {
        None => true,
        Some(c) => !(chars::is_letter(c) || chars::is_number(c) || chars::is_mark(c)),
    }
}

/// Scans the normalized location for any term. Reports the leftmost hit,
/// preferring the longest term among hits that start at the same offset.
pub fn match_location(location: &str, terms: &TermList) -> MatchResult {
    let norm = normalize_for_matching(location, &NormalizationConfig::matching());
    if norm.is_empty() {
        return MatchResult::none();
    }
    let mut best: Option<(usize, usize, usize)> = None;
    for m in terms.matcher.find_overlapping_iter(&norm) {
        let idx = m.pattern().as_usize();
        let letters = terms.letters[idx];
        let ok = letters == 0
            || letters >= SUBSTRING_MIN_LETTERS
            || (is_boundary(&norm, m.start(), true) && is_boundary(&norm, m.end(), false));
        if !ok {
            continue;
        }
        let cand = (m.start(), m.end() - m.start(), idx);
        best = match best {
            None => Some(cand),
            Some(b) if cand.0 < b.0 || (cand.0 == b.0 && cand.1 > b.1) => Some(cand),
            keep => keep,
        };
    }
    match best {
        Some((_, _, idx)) => MatchResult {
            matched: true,
            matched_term: Some(terms.terms[idx].clone()),
            source: MatchSource::LocationTerm,
        },
        None => MatchResult::none(),
    }
}

/// Country code first, then the location field.
pub fn match_record(rec: &TweetRecord, terms: &TermList) -> MatchResult {
    let by_code = match_country_code(rec);
    if by_code.matched {
        return by_code;
    }
    match &rec.location {
        Some(loc) => match_location(loc, terms),
        None => MatchResult::none(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub country_code: u64,
    pub location_term: u64,
    pub none: u64,
    pub malformed: u64,
}

impl FilterReport {
    pub fn total(&self) -> u64 {
        self.country_code + self.location_term + self.none + self.malformed
    }

    pub fn selected(&self) -> u64 {
        self.country_code + self.location_term
    }

    fn add(&mut self, source: MatchSource) {
        match source {
            MatchSource::CountryCode => self.country_code += 1,
            MatchSource::LocationTerm => self.location_term += 1,
            MatchSource::None => self.none += 1,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "geo-filter: country_code={} location_term={} none={} malformed={} selected={} total={}",
            self.country_code,
            self.location_term,
            self.none,
            self.malformed,
            self.selected(),
            self.total()
        )
    }
}

/// In-memory selection over already-decoded records.
pub fn filter_records(
    records: &[TweetRecord],
    terms: &TermList,
) -> (Vec<TweetRecord>, FilterReport) {
    let mut report = FilterReport::default();
    let mut selected = Vec::new();
    for rec in records {
        let m = match_record(rec, terms);
        report.add(m.source);
        if m.matched {
            selected.push(rec.clone());
        }
    }
    (selected, report)
}

/// Streams JSONL records from `input` to `output`, keeping input order.
///
/// Malformed lines (bad JSON, empty id, bad country code, repeated id) are
/// counted and skipped. Blank lines are ignored.
pub fn filter_stream<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    terms: &TermList,
) -> Result<FilterReport> {
    let mut report = FilterReport::default();
    let mut ids = HashSet::new();
    parallel::for_each_block(input, |block| {
        let results = parallel::map_ordered(block, |line| {
            TweetRecord::from_json_line(line).map(|rec| {
                let m = match_record(&rec, terms);
                (rec, m)
            })
        });
        for res in results {
            match res {
                Ok((rec, m)) => {
                    if !ids.insert(rec.id.clone()) {
                        report.malformed += 1;
                        continue;
                    }
                    report.add(m.source);
                    if m.matched {
                        writeln!(output, "{}", rec.to_json_line())?;
                    }
                }
                Err(_) => report.malformed += 1,
            }
        }
        Ok(())
    })?;
    output.flush()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, loc: Option<&str>, cc: Option<&str>) -> TweetRecord {
        TweetRecord {
            id: id.into(),
            text: "نص".into(),
            location: loc.map(Into::into),
            country_code: cc.map(Into::into),
        }
    }

    fn terms(list: &[&str]) -> TermList {
        TermList::from_terms(list.iter().copied(), "test").unwrap()
    }

    #[test]
    fn term_list_loading() {
        let t = TermList::parse("KSA\nksa\n# comment\n", "t").unwrap();
        assert_eq!(t.size(), 1);
        let t = TermList::parse("🇸🇦\nSaudi\nالرياض\n", "t").unwrap();
        assert_eq!(t.size(), 3);
        assert!(matches!(TermList::parse("", "t"), Err(Error::Config(_))));
        let t = TermList::parse("!!!\nksa\n", "t").unwrap();
        assert_eq!(t.rejected_lines, 1);
        assert!(load_term_list(Path::new("/nonexistent/terms.txt")).is_err());
    }

    #[test]
    fn builtin_list_is_normalized() {
        let t = TermList::builtin();
        assert!(t.size() > 100);
        let cfg = NormalizationConfig::matching();
        for term in t.terms() {
            assert_eq!(&normalize_for_matching(term, &cfg), term);
        }
    }

    #[test]
    fn country_code() {
        assert_eq!(
            match_country_code(&rec("1", None, Some("SA"))).source,
            MatchSource::CountryCode
        );
        assert!(match_country_code(&rec("1", None, Some("sa"))).matched);
        assert!(!match_country_code(&rec("1", None, Some("EG"))).matched);
        assert!(!match_country_code(&rec("1", None, None)).matched);
    }

    #[test]
    fn location_matching() {
        let t = terms(&["ksa", "🇸🇦"]);
        let m = match_location("Jeddah, KSA 🇸🇦", &t);
        assert!(m.matched);
        assert_eq!(m.matched_term.as_deref(), Some("ksa"));
        assert!(!match_location("New York", &TermList::builtin()).matched);
        assert!(match_location("Riyadhhhhh", &terms(&["riyadh"])).matched);
        // short terms need word boundaries
        assert!(!match_location("ksamir", &t).matched);
        assert!(match_location("🇸🇦🇸🇦", &t).matched);
        // long terms match as substrings
        assert!(match_location("#Riyadh_City", &terms(&["riyadh"])).matched);
        assert!(match_location("greaterriyadh", &terms(&["riyadh"])).matched);
    }

    #[test]
    fn longest_term_wins_at_same_offset() {
        let t = terms(&["saudi", "saudi arabia"]);
        let m = match_location("Saudi Arabia", &t);
        assert_eq!(m.matched_term.as_deref(), Some("saudi arabia"));
    }

    #[test]
    fn record_precedence() {
        let t = terms(&["riyadh"]);
        let m = match_record(&rec("1", Some("Riyadh"), Some("SA")), &t);
        assert_eq!(m.source, MatchSource::CountryCode);
        assert_eq!(m.matched_term, None);
        let m = match_record(&rec("1", Some("Riyadh"), Some("EG")), &t);
        assert_eq!(m.source, MatchSource::LocationTerm);
    }

    #[test]
    fn stream_counts() {
        let t = terms(&["riyadh"]);
        let input = [
            rec("1", None, Some("SA")).to_json_line(),
            rec("2", Some("Riyadh"), None).to_json_line(),
            rec("3", Some("Cairo"), Some("EG")).to_json_line(),
            "{not json".to_string(),
            r#"{"id":"5","text":"x","country_code":"SAU"}"#.to_string(),
            rec("1", None, Some("SA")).to_json_line(),
        ]
        .join("\n");
        let mut out = Vec::new();
        let report = filter_stream(input.as_bytes(), &mut out, &t).unwrap();
        assert_eq!(report.country_code, 1);
        assert_eq!(report.location_term, 1);
        assert_eq!(report.none, 1);
        assert_eq!(report.malformed, 3);
        assert_eq!(report.total(), 6);
        let lines: Vec<_> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains(r#""id":"1""#));
        assert!(lines[1].contains(r#""id":"2""#));
    }

    #[test]
    fn empty_stream() {
        let mut out = Vec::new();
        let report = filter_stream(&b""[..], &mut out, &TermList::builtin()).unwrap();
        assert_eq!(report, FilterReport::default());
        assert!(out.is_empty());
    }

    #[test]
    fn unknown_fields_ignored() {
        let r = TweetRecord::from_json_line(
            r#"{"id":"9","text":"t","location":null,"country_code":null,"lang":"ar"}"#,
        )
        .unwrap();
        assert_eq!(r.location, None);
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z]{2,7}|[\u{0627}-\u{064A}]{2,6}"
    }

    proptest! {
        #[test]
        fn adding_terms_never_shrinks_selection(
            base in proptest::collection::vec(word(), 1..6),
            extra in word(),
            locs in proptest::collection::vec(
                proptest::collection::vec(word(), 0..4).prop_map(|w| w.join(" ")), 1..20),
        ) {
            let small = TermList::from_terms(base.iter(), "p");
            prop_assume!(small.is_ok());
            let small = small.unwrap();
            let big = TermList::from_terms(base.iter().chain(std::iter::once(&extra)), "p").unwrap();
            let count = |t: &TermList| locs.iter().filter(|l| match_location(l, t).matched).count();
            prop_assert!(count(&big) >= count(&small));
        }

        #[test]
        fn every_term_matches_itself(t in word()) {
            let list = TermList::from_terms([t.as_str()], "p");
            prop_assume!(list.is_ok());
            prop_assert!(match_location(&t, &list.unwrap()).matched);
        }
    }

    #[test]
    fn builtin_terms_match_themselves() {
        let list = TermList::builtin();
        for raw in DEFAULT_TERMS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            assert!(match_location(raw, &list).matched, "{raw}");
        }
    }
}
