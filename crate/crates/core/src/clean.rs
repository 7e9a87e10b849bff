//! Corpus cleaning for tweets and forum posts.
//!
//! Rule order (frozen): markup stripping (forum mode only), URL / mention /
//! hashtag removal, e-mail removal, whitespace collapse, long-number removal,
//! repetition caps, whitespace collapse. The sequence is repeated until the
//! text stops changing, so cleaning is idempotent even when one removal
//! exposes a pattern for an earlier rule (`htt12345678p://x`).
//!
//! Emoji, emoticons, punctuation and diacritics are never targeted; they only
//! disappear when they sit inside a removed span or exceed a repetition cap.
//! In forum mode entity decoding may turn `&quot;` into `"`.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use regex::Regex;
use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};

use crate::chars;
use crate::error::{Error, Result};
use crate::geo_filter::TweetRecord;
use crate::normalize::{cap_repetitions, collapse_whitespace};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Tweet,
    Forum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub source: Source,
    pub origin: Option<String>,
}

impl Document {
    pub fn tweet(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: id.into(),
            text: text.into(),
            source: Source::Tweet,
            origin: None,
        }
    }

    pub fn forum(id: impl Into<String>, text: impl Into<String>, origin: Option<String>) -> Self {
        Document {
            doc_id: id.into(),
            text: text.into(),
            source: Source::Forum,
            origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Kept,
    TooFewWords,
    TooMuchEnglish,
    EmptyAfterCleaning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterDecision {
    pub kept: bool,
    pub reason: Reason,
}

impl FilterDecision {
    fn from_reason(reason: Reason) -> Self {
        FilterDecision {
            kept: reason == Reason::Kept,
            reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub min_words: usize,
    /// Documents whose English letter ratio is strictly above this are dropped.
    pub english_ratio_threshold: f64,
    /// Digit runs longer than this are removed.
    pub max_digit_run: usize,
    pub letter_rep_cap: usize,
    pub other_rep_cap: usize,
    pub strip_markup: bool,
    /// Drop the whole `#tag` token (true) or only the `#` sign.
    pub remove_hashtag_text: bool,
    /// CSS selectors for post containers in forum HTML.
    pub post_selectors: Vec<String>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_words: 3,
            english_ratio_threshold: 0.5,
            max_digit_run: 7,
            letter_rep_cap: 5,
            other_rep_cap: 4,
            strip_markup: false,
            remove_hashtag_text: true,
            post_selectors: vec![
                "div.post".into(),
                "div.reply".into(),
                "blockquote.postcontent".into(),
            ],
        }
    }
}

impl CleanConfig {
    pub fn forum() -> Self {
        CleanConfig {
            strip_markup: true,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_words == 0 {
            return Err(Error::config("min_words must be at least 1"));
        }
        if !(self.english_ratio_threshold > 0.0 && self.english_ratio_threshold <= 1.0) {
            return Err(Error::config("english_ratio_threshold must be in (0, 1]"));
        }
        if self.max_digit_run == 0 {
            return Err(Error::config("max_digit_run must be at least 1"));
        }
        if self.letter_rep_cap == 0 || self.other_rep_cap == 0 {
            return Err(Error::config("repetition caps must be at least 1"));
        }
        for sel in &self.post_selectors {
            Selector::parse(sel).map_err(|e| Error::config(format!("selector {sel:?}: {e}")))?;
        }
        Ok(())
    }
}

const URL_RE: &str = r"(?i)[a-z][a-z0-9+.\-]*://\S*|www\.\S*";
const MENTION_RE: &str = r"(^|[^\w@])@\w+";
const HASHTAG_RE: &str = r"(^|[^\w&#])#\w+";
const EMAIL_RE: &str = r"[\w.+\-]+@[\w\-]+(?:\.[\w\-]+)*\.\w{2,}";
const HTML_TAG_RE: &str = r"<[A-Za-z/!?][^<>]*>";
const BBCODE_RE: &str = r"\[/?[A-Za-z*][A-Za-z0-9*]*(?:[= ][^\[\]]*)?\]";
const PERCENT_RE: &str = r"(?:%[0-9A-Fa-f]{2})+";
const DIGITS: &str = "0-9\u{0660}-\u{0669}\u{06F0}-\u{06F9}";

/// Compiled form of a [`CleanConfig`].
#[derive(Debug, Clone)]
pub struct Cleaner {
    cfg: CleanConfig,
    url: Regex,
    mention: Regex,
    hashtag: Regex,
    email: Regex,
    long_number: Regex,
    markup: Markup,
}

#[derive(Debug, Clone)]
struct Markup {
    tag: Regex,
    bbcode: Regex,
    percent: Regex,
}

impl Markup {
    fn new() -> Self {
        Markup {
            tag: Regex::new(HTML_TAG_RE).unwrap(),
            bbcode: Regex::new(BBCODE_RE).unwrap(),
            percent: Regex::new(PERCENT_RE).unwrap(),
        }
    }

    fn strip(&self, text: &str) -> String {
        let mut cur = text.to_string();
        // entity decoding can expose new tags (`&lt;b&gt;`); every pass that
        // changes the text makes it shorter, so this terminates
        loop {
            let s = self.tag.replace_all(&cur, " ");
            let s = html_escape::decode_html_entities(&s).into_owned();
            let s = self.bbcode.replace_all(&s, "");
            let s = self.percent.replace_all(&s, "").into_owned();
            if s == cur {
                return cur;
            }
            cur = s;
        }
    }
}

fn long_number_regex(max_digit_run: usize) -> Regex {
    Regex::new(&format!("[{DIGITS}]{{{},}}", max_digit_run + 1)).unwrap()
}

impl Cleaner {
    pub fn new(cfg: CleanConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Cleaner {
            url: Regex::new(URL_RE).unwrap(),
            mention: Regex::new(MENTION_RE).unwrap(),
            hashtag: Regex::new(HASHTAG_RE).unwrap(),
            email: Regex::new(EMAIL_RE).unwrap(),
            long_number: long_number_regex(cfg.max_digit_run),
            markup: Markup::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &CleanConfig {
        &self.cfg
    }

    fn remove_urls_mentions_hashtags(&self, text: &str) -> String {
        let s = self.url.replace_all(text, " ");
        let s = self.mention.replace_all(&s, "$1 ");
        let s = if self.cfg.remove_hashtag_text {
            self.hashtag.replace_all(&s, "$1 ")
        } else {
            s
        };
        collapse_whitespace(&s)
    }

    fn pass(&self, text: &str, markup: bool) -> String {
        let mut s = if markup {
            self.markup.strip(text)
        } else {
            text.to_string()
        };
        s = self.remove_urls_mentions_hashtags(&s);
        s = self.email.replace_all(&s, " ").into_owned();
        s = collapse_whitespace(&s);
        s = self.long_number.replace_all(&s, "").into_owned();
        s = cap_repetitions(&s, self.cfg.letter_rep_cap, self.cfg.other_rep_cap);
        collapse_whitespace(&s)
    }

    /// Applies the rule sequence until the text is a fixed point.
    pub fn clean_text(&self, text: &str, source: Source) -> String {
        let markup = self.cfg.strip_markup || source == Source::Forum;
        let mut cur = self.pass(text, markup);
        loop {
            let next = self.pass(&cur, markup);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    pub fn decide(&self, text: &str) -> FilterDecision {
        let reason = if text.is_empty() {
            Reason::EmptyAfterCleaning
        } else if word_count(text) < self.cfg.min_words {
            Reason::TooFewWords
        } else if english_ratio(text) > self.cfg.english_ratio_threshold {
            Reason::TooMuchEnglish
        } else {
            Reason::Kept
        };
        FilterDecision::from_reason(reason)
    }

    pub fn clean_document(&self, doc: &Document) -> (Document, FilterDecision) {
        let text = self.clean_text(&doc.text, doc.source);
        let decision = self.decide(&text);
        (
            Document {
                text,
                ..doc.clone()
            },
            decision,
        )
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Drops URLs (`scheme://…`, `www.…`), @-mentions and whole hashtags.
pub fn remove_urls_mentions_hashtags(text: &str) -> String {
    Cleaner::new(CleanConfig::default())
        .expect("default config")
        .remove_urls_mentions_hashtags(text)
}

pub fn remove_emails(text: &str) -> String {
    let re = Regex::new(EMAIL_RE).unwrap();
    collapse_whitespace(&re.replace_all(text, " "))
}

/// Removes HTML tags (decoding entities), BBCode tags (keeping inner text)
/// and percent-encoded runs, then collapses whitespace.
pub fn strip_markup(text: &str) -> String {
    collapse_whitespace(&Markup::new().strip(text))
}

/// Removes every maximal digit run longer than `max_digit_run`.
pub fn remove_long_numbers(text: &str, max_digit_run: usize) -> String {
    let s = long_number_regex(max_digit_run.max(1)).replace_all(text, "");
    collapse_whitespace(&s)
}

/// Latin letters over Latin plus Arabic letters; 0 when neither occurs.
pub fn english_ratio(text: &str) -> f64 {
    let mut latin = 0usize;
    let mut arabic = 0usize;
    for c in text.chars() {
        if chars::is_latin_letter(c) {
            latin += 1;
        } else if chars::is_arabic_letter(c) {
            arabic += 1;
        }
    }
    if latin + arabic == 0 {
        0.0
    } else {
        latin as f64 / (latin + arabic) as f64
    }
}

pub fn clean_document(doc: &Document, cfg: &CleanConfig) -> Result<(Document, FilterDecision)> {
    Ok(Cleaner::new(cfg.clone())?.clean_document(doc))
}

fn element_text(el: scraper::ElementRef<'_>) -> String {
    let mut out = String::new();
    for node in el.descendants() {
        let Some(text) = node.value().as_text() else {
            continue;
        };
        let hidden = node.ancestors().any(|a| {
            a.value()
                .as_element()
                .is_some_and(|e| matches!(e.name(), "script" | "style" | "noscript"))
        });
        if !hidden {
            out.push_str(text);
            out.push(' ');
        }
    }
    collapse_whitespace(&out)
}

/// Extracts one document per post container from a forum page; falls back
/// to the whole page text when no selector matches.
pub fn html_to_documents(html: &str, origin: &str, cfg: &CleanConfig) -> Result<Vec<Document>> {
    if html.trim().is_empty() {
        return Ok(Vec::new());
    }
    let looks_like_html = Regex::new(r"<[A-Za-z!/]").unwrap().is_match(html);
    if !looks_like_html {
        log::warn!("{origin}: not HTML, skipped");
        return Ok(Vec::new());
    }
    let page = Html::parse_document(html);
    let mut docs = Vec::new();
    if !cfg.post_selectors.is_empty() {
        let joined = cfg.post_selectors.join(", ");
        let sel = Selector::parse(&joined)
            .map_err(|e| Error::config(format!("selector {joined:?}: {e}")))?;
        for (i, el) in page.select(&sel).enumerate() {
            docs.push(Document::forum(
                format!("{origin}#{i}"),
                element_text(el),
                Some(origin.to_string()),
            ));
        }
    }
    if docs.is_empty() {
        let body = Selector::parse("body").unwrap();
        let text = match page.select(&body).next() {
            Some(b) => element_text(b),
            None => element_text(page.root_element()),
        };
        docs.push(Document::forum(
            format!("{origin}#0"),
            text,
            Some(origin.to_string()),
        ));
    }
    Ok(docs)
}

pub fn html_file_to_documents(path: &Path, cfg: &CleanConfig) -> Result<Vec<Document>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let html = match String::from_utf8(bytes) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("{}: not valid UTF-8, decoding lossily", path.display());
            String::from_utf8_lossy(e.as_bytes()).into_owned()
        }
    };
    let origin = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    html_to_documents(&html, &origin, cfg)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub input: u64,
    pub kept: u64,
    pub too_few_words: u64,
    pub too_much_english: u64,
    pub empty_after_cleaning: u64,
    pub malformed: u64,
}

impl CleanReport {
    fn add(&mut self, reason: Reason) {
        self.input += 1;
        match reason {
            Reason::Kept => self.kept += 1,
            Reason::TooFewWords => self.too_few_words += 1,
            Reason::TooMuchEnglish => self.too_much_english += 1,
            Reason::EmptyAfterCleaning => self.empty_after_cleaning += 1,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "clean: input={} kept={} too_few_words={} too_much_english={} empty_after_cleaning={} malformed={}",
            self.input,
            self.kept,
            self.too_few_words,
            self.too_much_english,
            self.empty_after_cleaning,
            self.malformed
        )
    }
}

#[derive(Serialize)]
struct Rejection<'a> {
    doc_id: &'a str,
    reason: Reason,
}

/// Writes kept texts one per line and rejections as `{doc_id, reason}` JSONL.
fn emit<W: Write, L: Write>(
    cleaner: &Cleaner,
    docs: &[Document],
    out: &mut W,
    rejected: &mut L,
    report: &mut CleanReport,
) -> Result<()> {
    let results = parallel::map_ordered(docs, |d| cleaner.clean_document(d));
    for (doc, decision) in results {
        report.add(decision.reason);
        if decision.kept {
            writeln!(out, "{}", doc.text)?;
        } else {
            let line = serde_json::to_string(&Rejection {
                doc_id: &doc.doc_id,
                reason: decision.reason,
            })
            .expect("rejection serializes");
            writeln!(rejected, "{line}")?;
        }
    }
    Ok(())
}

/// Cleans a JSONL tweet stream (the geo-filter output shape).
pub fn clean_tweet_stream<R: BufRead, W: Write, L: Write>(
    cleaner: &Cleaner,
    input: R,
    mut out: W,
    mut rejected: L,
) -> Result<CleanReport> {
    let mut report = CleanReport::default();
    parallel::for_each_block(input, |block| {
        let mut docs = Vec::with_capacity(block.len());
        for line in block {
            match TweetRecord::from_json_line(line) {
                Ok(rec) => docs.push(Document::tweet(rec.id, rec.text)),
                Err(_) => report.malformed += 1,
            }
        }
        emit(cleaner, &docs, &mut out, &mut rejected, &mut report)
    })?;
    out.flush()?;
    rejected.flush()?;
    Ok(report)
}

/// Cleans every `*.html` / `*.htm` file of `dir`, in file-name order.
pub fn clean_forum_dir<W: Write, L: Write>(
    cleaner: &Cleaner,
    dir: &Path,
    mut out: W,
    mut rejected: L,
) -> Result<CleanReport> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("html") || x.eq_ignore_ascii_case("htm"))
        })
        .collect();
    files.sort();
    let mut report = CleanReport::default();
    for chunk in files.chunks(64) {
        let pages = parallel::map_ordered(chunk, |p| html_file_to_documents(p, cleaner.config()));
        let mut docs = Vec::new();
        for page in pages {
            docs.extend(page?);
        }
        emit(cleaner, &docs, &mut out, &mut rejected, &mut report)?;
    }
    out.flush()?;
    rejected.flush()?;
    Ok(report)
}
