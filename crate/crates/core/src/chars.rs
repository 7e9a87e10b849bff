//! Character-class predicates shared by the text modules.

use std::sync::LazyLock;

use regex::Regex;

macro_rules! class {
    ($name:ident, $re:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($re).unwrap());
    };
}

class!(LETTER, r"^\p{L}$");
class!(LATIN_LETTER, r"^[\p{Latin}&&\p{L}]$");
class!(ARABIC_LETTER, r"^[\p{Arabic}&&\p{L}]$");
class!(MARK, r"^\p{M}$");
class!(NUMBER, r"^\p{N}$");
class!(PUNCT, r"^\p{P}$");
class!(SYMBOL, r"^\p{S}$");
class!(FORMAT, r"^\p{Cf}$");
class!(PICTOGRAPHIC, r"^\p{Extended_Pictographic}$");
class!(EMOJI_MODIFIER, r"^\p{Emoji_Modifier}$");

pub const TATWEEL: char = '\u{0640}';
pub const SAUDI_FLAG: &str = "\u{1F1F8}\u{1F1E6}";

fn test(re: &Regex, c: char) -> bool {
    let mut buf = [0u8; 4];
    re.is_match(c.encode_utf8(&mut buf))
}

pub fn is_letter(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_alphabetic();
    }
    test(&LETTER, c)
}

pub fn is_latin_letter(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_alphabetic();
    }
    test(&LATIN_LETTER, c)
}

pub fn is_arabic_letter(c: char) -> bool {
    if c.is_ascii() {
        return false;
    }
    test(&ARABIC_LETTER, c)
}

pub fn is_mark(c: char) -> bool {
    !c.is_ascii() && test(&MARK, c)
}

pub fn is_number(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_digit();
    }
    test(&NUMBER, c)
}

pub fn is_punct(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation() && !is_symbol(c);
    }
    test(&PUNCT, c)
}

pub fn is_symbol(c: char) -> bool {
    test(&SYMBOL, c)
}

pub fn is_format(c: char) -> bool {
    !c.is_ascii() && test(&FORMAT, c)
}

/// Tashkeel (U+064B..=U+0652) and superscript alef (U+0670).
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}')
}

pub fn is_regional_indicator(c: char) -> bool {
    matches!(c, '\u{1F1E6}'..='\u{1F1FF}')
}

/// Digits matched by the long-number rule: ASCII and Arabic-Indic (both blocks).
pub fn is_counted_digit(c: char) -> bool {
    matches!(c, '0'..='9' | '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}')
}

/// Codepoints that make a grapheme cluster an emoji: pictographs,
/// regional indicators, skin-tone modifiers.
pub fn is_emoji_char(c: char) -> bool {
    if c.is_ascii() {
        return false;
    }
    is_regional_indicator(c) || test(&PICTOGRAPHIC, c) || test(&EMOJI_MODIFIER, c)
}

/// Emoji glue: ZWJ, variation selectors, combining keycap.
pub fn is_emoji_component(c: char) -> bool {
    matches!(c, '\u{200D}' | '\u{FE00}'..='\u{FE0F}' | '\u{20E3}' | '\u{E0020}'..='\u{E007F}')
}

pub fn is_emoji_grapheme(g: &str) -> bool {
    g.chars().any(is_emoji_char)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes() {
        assert!(is_letter('ك'));
        assert!(is_arabic_letter('ك'));
        assert!(!is_arabic_letter('\u{064E}'));
        assert!(is_latin_letter('á'));
        assert!(is_mark('\u{064E}'));
        assert!(is_number('٣'));
        assert!(is_punct('؟'));
        assert!(is_punct('!'));
        assert!(is_symbol('+'));
        assert!(!is_punct('+'));
        assert!(is_emoji_char('😂'));
        assert!(is_emoji_char('\u{1F1F8}'));
        assert!(!is_emoji_char('a'));
        assert!(is_format('\u{200C}'));
    }
}
