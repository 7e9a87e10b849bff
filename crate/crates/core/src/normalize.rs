//! Unicode normalization primitives.
//!
//! Two consumers with opposite needs share this module: location matching
//! folds aggressively (case, accents, alif variants, punctuation, emoji other
//! than the Saudi flag), while corpus cleaning only caps repetitions and
//! otherwise leaves the text untouched.

use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::chars::{self, SAUDI_FLAG, TATWEEL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    pub strip_diacritics: bool,
    pub strip_tatweel: bool,
    pub unify_alif: bool,
    /// ة -> ه
    pub unify_ta_marbuta: bool,
    /// ى -> ي
    pub unify_alif_maqsura: bool,
    pub fold_latin: bool,
    pub lowercase: bool,
    pub strip_symbols_punct: bool,
    pub strip_emoji_except_flag: bool,
    /// Letter runs longer than this are cut down to it.
    pub collapse_letter_runs: Option<usize>,
    pub letter_rep_cap: usize,
    pub other_rep_cap: usize,
}

impl NormalizationConfig {
    /// Every matching-mode rule enabled, letter runs collapsed to one.
    pub fn matching() -> Self {
        NormalizationConfig {
            strip_diacritics: true,
            strip_tatweel: true,
            unify_alif: true,
            unify_ta_marbuta: false,
            unify_alif_maqsura: false,
            fold_latin: true,
            lowercase: true,
            strip_symbols_punct: true,
            strip_emoji_except_flag: true,
            collapse_letter_runs: Some(1),
            letter_rep_cap: 5,
            other_rep_cap: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.letter_rep_cap == 0 || self.other_rep_cap == 0 {
            return Err(Error::config("repetition caps must be at least 1"));
        }
        if self.collapse_letter_runs == Some(0) {
            return Err(Error::config("collapse_letter_runs must be at least 1"));
        }
        Ok(())
    }
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self::matching()
    }
}

pub fn strip_diacritics(text: &str) -> String {
    text.chars()
        .filter(|&c| !chars::is_arabic_diacritic(c))
        .collect()
}

pub fn strip_tatweel(text: &str) -> String {
    text.chars().filter(|&c| c != TATWEEL).collect()
}

pub fn unify_alif(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '\u{0623}' | '\u{0625}' | '\u{0622}' => '\u{0627}',
            other => other,
        })
        .collect()
}

pub fn unify_ta_marbuta(text: &str) -> String {
    text.replace('\u{0629}', "\u{0647}")
}

pub fn unify_alif_maqsura(text: &str) -> String {
    text.replace('\u{0649}', "\u{064A}")
}

/// Reduces accented Latin letters to their base letter.
///
/// Only Latin-script letters are decomposed (NFKD), and only combining marks
/// sitting on a Latin base are dropped; Arabic hamza forms and other scripts
/// pass through unchanged.
pub fn fold_latin(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev_latin = false;
    for c in text.chars() {
        if chars::is_mark(c) {
            if !prev_latin {
                out.push(c);
            }
            continue;
        }
        if chars::is_latin_letter(c) && !c.is_ascii() {
            for d in std::iter::once(c).nfkd() {
                if !chars::is_mark(d) {
                    out.push(d);
                }
            }
            prev_latin = true;
        } else {
            out.push(c);
            prev_latin = chars::is_latin_letter(c);
        }
    }
    out
}

fn is_letter_cluster(g: &str) -> bool {
    g.chars().next().is_some_and(chars::is_letter)
}

/// Truncates runs of an identical grapheme cluster: letters to `letter_cap`,
/// everything else (digits, punctuation, emoji) to `other_cap`.
pub fn cap_repetitions(text: &str, letter_cap: usize, other_cap: usize) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<&str> = None;
    let mut run = 0usize;
    for g in text.graphemes(true) {
        if prev == Some(g) {
            run += 1;
        } else {
            prev = Some(g);
            run = 1;
        }
        let cap = if is_letter_cluster(g) {
            letter_cap
        } else {
            other_cap
        };
        if run <= cap {
            out.push_str(g);
        }
    }
    out
}

/// Same as [`cap_repetitions`] but only letter runs are touched.
fn collapse_letter_runs(text: &str, target: usize) -> String {
    cap_repetitions(text, target, usize::MAX)
}

pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Replaces punctuation, symbols and emoji (other than the Saudi flag) with
/// spaces; format controls (ZWJ, bidi marks) are dropped outright.
fn strip_non_word(text: &str, symbols: bool, emoji: bool) -> String {
    let mut out = String::with_capacity(text.len());
    for g in text.graphemes(true) {
        if g == SAUDI_FLAG {
            if emoji {
                out.push(' ');
                out.push_str(g);
                out.push(' ');
            } else {
                out.push_str(g);
            }
            continue;
        }
        if chars::is_emoji_grapheme(g) {
            if emoji {
                out.push(' ');
            } else {
                out.push_str(g);
            }
            continue;
        }
        for c in g.chars() {
            if c.is_whitespace() || (symbols && (chars::is_punct(c) || chars::is_symbol(c))) {
                out.push(' ');
            } else if emoji && (chars::is_format(c) || chars::is_emoji_component(c)) {
                // glue left over from a broken emoji sequence
            } else {
                out.push(c);
            }
        }
    }
    out
}

/// Canonical form used on both sides of location matching.
///
/// Rule order: lowercase, Latin folding, Arabic letter rules, removal of
/// punctuation/symbols/emoji, letter-run collapse, whitespace collapse.
pub fn normalize_for_matching(text: &str, cfg: &NormalizationConfig) -> String {
    let mut s = text.to_string();
    if cfg.lowercase {
        s = s.to_lowercase();
    }
    if cfg.fold_latin {
        s = fold_latin(&s);
        if cfg.lowercase {
            s = s.to_lowercase();
        }
    }
    if cfg.strip_diacritics {
        s = strip_diacritics(&s);
    }
    if cfg.strip_tatweel {
        s = strip_tatweel(&s);
    }
    if cfg.unify_alif {
        s = unify_alif(&s);
    }
    if cfg.unify_ta_marbuta {
        s = unify_ta_marbuta(&s);
    }
    if cfg.unify_alif_maqsura {
        s = unify_alif_maqsura(&s);
    }
    if cfg.strip_symbols_punct || cfg.strip_emoji_except_flag {
        s = strip_non_word(&s, cfg.strip_symbols_punct, cfg.strip_emoji_except_flag);
    }
    if let Some(target) = cfg.collapse_letter_runs {
        s = collapse_letter_runs(&s, target);
    }
    collapse_whitespace(&s)
}
