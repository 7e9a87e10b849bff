//! A seeded 1,000-document corpus of tweets and forum pages with planted
//! noise, together with the outputs each stage must produce.
//!
//! Every document is assembled from clean words plus noise tokens that the
//! cleaning rules remove completely, so the expected cleaned text is known
//! by construction rather than computed by the code under test.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TWEET_LINES: usize = 700;
pub const PAGES: usize = 100;
pub const POSTS_PER_PAGE: usize = 3;

const ARABIC: &[&str] = &[
    "الجو",
    "اليوم",
    "حار",
    "مره",
    "ابي",
    "اروح",
    "البحر",
    "بكرة",
    "نطلع",
    "نتعشى",
    "الليلة",
    "القهوة",
    "السعودية",
    "التمر",
    "الهلال",
    "فاز",
    "على",
    "النصر",
    "السوق",
    "مزحوم",
    "خلنا",
    "نروح",
    "بدري",
    "الغدا",
    "الدوام",
    "الساعة",
    "الصبح",
    "طريق",
    "سالك",
    "زحمة",
    "ودي",
    "اسافر",
    "الصيف",
    "جمهوره",
    "كبير",
    "الشباب",
    "البر",
    "المطر",
    "نزل",
    "امس",
    "جوالي",
    "خربان",
    "خالي",
    "ساكن",
    "المعرض",
    "يفتح",
    "الخميس",
    "العيد",
    "قرب",
    "ولدي",
    "نجح",
    "الملعب",
    "مليان",
    "نحجز",
    "فندق",
    "مشهور",
    "مباراة",
    "قوية",
    "ضيوفنا",
    "وصلوا",
    "العصر",
    "اثار",
    "قديمة",
    "جميلة",
    "رمضان",
    "كريم",
    "سيارة",
    "جديدة",
    "المدرسة",
    "قريبة",
    "بيتنا",
    "مزارع",
    "صديقي",
    "مهندس",
    "الشاي",
    "بالنعناع",
    "المزاج",
    "الطيارة",
    "تاخرت",
    "ساعتين",
    "حماسية",
    "خلصت",
    "الشغل",
    "البيت",
    "الجامعة",
    "البنك",
    "المطعم",
    "لذيذ",
    "ابوي",
    "يقرا",
    "الجريدة",
    "الكهربا",
    "الحي",
    "الجبال",
    "خضرا",
    "باردة",
    "عرس",
    "الاسبوع",
    "الجاي",
    "الاسعار",
    "غليت",
    "الموسم",
    "قريب",
    "صافي",
    "هادي",
    "الحرم",
    "الدكتور",
    "لازم",
    "ارتاح",
    "شوي",
    "الباص",
    "الدرس",
    "كورنيش",
    "للمشي",
    "نتقابل",
    "الدوار",
];
/// Words carrying diacritics, which cleaning must keep.
const VOWELLED: &[&str] = &["مُمتاز", "شُكْراً", "جَميل", "الحَمدُلله"];
/// Words elongated by repeating their final letter.
const STRETCHABLE: &[&str] = &["حلو", "يجنن", "زين", "كذا", "والله", "تعال", "طيب", "مشكور"];
const ENGLISH: &[&str] = &[
    "the", "match", "was", "amazing", "tonight", "see", "you", "soon", "really", "great",
    "weather", "today", "love", "this", "place", "coffee", "morning", "traffic", "again", "best",
    "team", "ever",
];
const EMOJI: &[&str] = &["😂", "❤️", "👍🏽", "🔥"];
const NUMBERS: &[&str] = &["2024", "١٤٤٥", "15", "٣٠"];

const SAUDI_LOCATIONS: &[&str] = &[
    "الرياض",
    "جدة",
    "Riyadh, KSA",
    "Jeddah",
    "مكة المكرمة",
    "الدمام - الشرقية",
    "Saudi Arabia",
    "القصيم",
    "ابها",
    "KSA 🇸🇦",
    "المدينة المنورة",
    "Dammam",
    "الخبر",
    "Tabuk",
    "حائل",
];
const FOREIGN_LOCATIONS: &[&str] = &[
    "Dubai",
    "Cairo, Egypt",
    "London",
    "الكويت",
    "Doha, Qatar",
    "Amman",
    "New York",
    "عمان الاردن",
    "Paris",
    "Manama",
];
const OTHER_COUNTRIES: &[&str] = &["AE", "EG", "KW", "US", "GB"];

/// Why a document is rejected, in the rejection log's spelling.
pub const TOO_FEW_WORDS: &str = "too_few_words";
pub const TOO_MUCH_ENGLISH: &str = "too_much_english";
pub const EMPTY: &str = "empty_after_cleaning";

pub struct Fixture {
    pub tweet_lines: Vec<String>,
    /// `(file name, html)` of every forum page, in file-name order.
    pub pages: Vec<(String, String)>,
    pub expected_geo_ids: Vec<String>,
    pub expected_malformed: usize,
    /// Cleaned corpus lines: selected tweets first, then forum posts.
    pub expected_clean: Vec<String>,
    pub expected_rejected: Vec<(String, &'static str)>,
    pub expected_dedup: Vec<String>,
    /// Documents in the fixture (tweet records plus forum posts).
    pub documents: usize,
}

/// A document as clean words plus the category it should land in.
#[derive(Clone)]
struct Body {
    /// Tokens as they appear in the raw text (elongations included).
    raw: Vec<String>,
    /// Tokens as cleaning must leave them.
    clean: Vec<String>,
    outcome: Outcome,
}

#[derive(Clone, Copy, PartialEq)]
enum Outcome {
    Kept,
    Rejected(&'static str),
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).unwrap()
}

fn stretched(rng: &mut ChaCha8Rng, word: &str, cap: usize, min_extra: usize) -> (String, String) {
    let last = word.chars().last().unwrap();
    let existing = word.chars().rev().take_while(|&c| c == last).count();
    let extra = rng.gen_range(min_extra..min_extra + 6);
    let raw = format!("{word}{}", last.to_string().repeat(extra));
    let keep = (existing + extra).min(cap);
    let stem: String = word.chars().take(word.chars().count() - existing).collect();
    (raw, format!("{stem}{}", last.to_string().repeat(keep)))
}

fn kept_body(rng: &mut ChaCha8Rng) -> Body {
    let n = rng.gen_range(3..9);
    let mut raw = Vec::new();
    let mut clean = Vec::new();
    for _ in 0..n {
        let (r, c) = match rng.gen_range(0..20) {
            0 => {
                let w = pick(rng, STRETCHABLE);
                stretched(rng, w, 5, 3)
            }
            1 => {
                let e = pick(rng, EMOJI);
                let k = rng.gen_range(2..9);
                (e.repeat(k), e.repeat(k.min(4)))
            }
            2 => {
                let k = rng.gen_range(1..9);
                ("!".repeat(k), "!".repeat(k.min(4)))
            }
            3 => {
                let w = pick(rng, VOWELLED);
                (w.to_string(), w.to_string())
            }
            4 => {
                let w = pick(rng, NUMBERS);
                (w.to_string(), w.to_string())
            }
            _ => {
                let w = pick(rng, ARABIC);
                (w.to_string(), w.to_string())
            }
        };
        raw.push(r);
        clean.push(c);
    }
    // At least three real words so punctuation-only tokens never decide the count.
    for _ in 0..3 {
        let w = pick(rng, ARABIC).to_string();
        raw.push(w.clone());
        clean.push(w);
    }
    Body {
        raw,
        clean,
        outcome: Outcome::Kept,
    }
}

fn body(rng: &mut ChaCha8Rng) -> Body {
    match rng.gen_range(0..20) {
        0..=1 => {
            let words: Vec<String> = (0..rng.gen_range(1..3))
                .map(|_| pick(rng, ARABIC).to_string())
                .collect();
            Body {
                raw: words.clone(),
                clean: words,
                outcome: Outcome::Rejected(TOO_FEW_WORDS),
            }
        }
        2..=3 => {
            let mut words: Vec<String> = (0..rng.gen_range(4..8))
                .map(|_| pick(rng, ENGLISH).to_string())
                .collect();
            words.insert(rng.gen_range(0..words.len()), "يا".to_string());
            Body {
                raw: words.clone(),
                clean: words,
                outcome: Outcome::Rejected(TOO_MUCH_ENGLISH),
            }
        }
        4 => Body {
            raw: vec![],
            clean: vec![],
            outcome: Outcome::Rejected(EMPTY),
        },
        _ => kept_body(rng),
    }
}

fn noise(rng: &mut ChaCha8Rng, forum: bool) -> String {
    let n = rng.gen_range(0..1000);
    let kinds = if forum { 8 } else { 5 };
    match rng.gen_range(0..kinds) {
        0 => format!("https://t.co/Ab{n}x"),
        1 => format!("www.example{n}.com/path?q={n}"),
        2 => format!("@user_{n}"),
        3 => format!("#هاشتاق_{n}"),
        4 => {
            if rng.gen_bool(0.5) {
                format!("name.{n}@mail.com")
            } else {
                format!("05{:08}", rng.gen_range(0..100_000_000u32))
            }
        }
        5 => "%D8%B3%D8%B9%D9%88%D8%AF".to_string(),
        6 => "<br>".to_string(),
        _ => "&nbsp;".to_string(),
    }
}

/// Interleaves noise tokens between the raw words.
fn render(rng: &mut ChaCha8Rng, body: &Body, forum: bool) -> String {
    let mut out: Vec<String> = Vec::new();
    let noisy = body.outcome == Outcome::Rejected(EMPTY);
    for w in &body.raw {
        if rng.gen_bool(0.25) {
            out.push(noise(rng, forum));
        }
        if forum && rng.gen_bool(0.1) {
            out.push(format!("<b>{w}</b>"));
        } else if forum && rng.gen_bool(0.1) {
            out.push(format!("[b]{w}[/b]"));
        } else {
            out.push(w.clone());
        }
    }
    if noisy || rng.gen_bool(0.3) {
        for _ in 0..rng.gen_range(1..3) {
            out.push(noise(rng, forum));
        }
    }
    if out.is_empty() {
        out.push(noise(rng, forum));
    }
    out.join(" ")
}

fn json_escape(s: &str) -> String {
    serde_json::to_string(s).unwrap()
}

fn page_html(posts: &[String]) -> String {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><title>منتدى الرياض</title>\
         <script>var tracker = \"@nobody https://x.io\";</script><style>.post { color: red }</style></head>\n<body>\
         <div class=\"nav\">الرئيسية | الأقسام | تسجيل الدخول</div>\n",
    );
    for (i, p) in posts.iter().enumerate() {
        let class = if i + 1 == posts.len() {
            "reply"
        } else {
            "post"
        };
        html.push_str(&format!("<div class=\"{class}\">{p}</div>\n"));
    }
    html.push_str("<div class=\"footer\">جميع الحقوق محفوظة 2024</div></body></html>\n");
    html
}

impl Fixture {
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut history: Vec<Body> = Vec::new();
        let mut next_body = |rng: &mut ChaCha8Rng| {
            let b = if !history.is_empty() && rng.gen_bool(0.15) {
                history.choose(rng).unwrap().clone()
            } else {
                body(rng)
            };
            if b.outcome == Outcome::Kept {
                history.push(b.clone());
            }
            b
        };

        let mut tweet_lines = Vec::new();
        let mut expected_geo_ids = Vec::new();
        let mut expected_clean = Vec::new();
        let mut expected_rejected = Vec::new();
        let mut expected_malformed = 0;
        let mut seen_ids = Vec::new();
        for i in 0..TWEET_LINES {
            if i % 97 == 50 {
                tweet_lines.push("{\"id\": \"broken\", \"text\": ".to_string());
                expected_malformed += 1;
                continue;
            }
            if i % 131 == 70 && !seen_ids.is_empty() {
                let dup: &String = seen_ids.choose(&mut rng).unwrap();
                tweet_lines.push(format!(
                    "{{\"id\":{},\"text\":\"مكرر\",\"country_code\":\"SA\"}}",
                    json_escape(dup)
                ));
                expected_malformed += 1;
                continue;
            }
            let id = format!("t{i:04}");
            let b = next_body(&mut rng);
            let text = render(&mut rng, &b, false);
            let (cc, loc, selected) = match rng.gen_range(0..10) {
                0..=2 => (
                    Some(if rng.gen_bool(0.5) { "SA" } else { "sa" }),
                    None,
                    true,
                ),
                3..=5 => (None, Some(pick(&mut rng, SAUDI_LOCATIONS)), true),
                6 => (
                    Some(pick(&mut rng, OTHER_COUNTRIES)),
                    Some(pick(&mut rng, SAUDI_LOCATIONS)),
                    true,
                ),
                7 => (Some("SA"), Some(pick(&mut rng, FOREIGN_LOCATIONS)), true),
                8 => (None, Some(pick(&mut rng, FOREIGN_LOCATIONS)), false),
                _ => (Some(pick(&mut rng, OTHER_COUNTRIES)), None, false),
            };
            let mut line = format!(
                "{{\"id\":{},\"text\":{}",
                json_escape(&id),
                json_escape(&text)
            );
            if let Some(l) = loc {
                line.push_str(&format!(",\"location\":{}", json_escape(l)));
            }
            if let Some(c) = cc {
                line.push_str(&format!(",\"country_code\":{}", json_escape(c)));
            }
            line.push('}');
            tweet_lines.push(line);
            seen_ids.push(id.clone());
            if selected {
                expected_geo_ids.push(id.clone());
                match b.outcome {
                    Outcome::Kept => expected_clean.push(b.clean.join(" ")),
                    Outcome::Rejected(r) => expected_rejected.push((id, r)),
                }
            }
        }

        let mut pages = Vec::new();
        for p in 0..PAGES {
            let name = format!("page_{p:03}.html");
            let mut posts = Vec::new();
            for k in 0..POSTS_PER_PAGE {
                let b = next_body(&mut rng);
                posts.push(render(&mut rng, &b, true));
                match b.outcome {
                    Outcome::Kept => expected_clean.push(b.clean.join(" ")),
                    Outcome::Rejected(r) => expected_rejected.push((format!("{name}#{k}"), r)),
                }
            }
            pages.push((name, page_html(&posts)));
        }

        let mut seen = HashSet::new();
        let expected_dedup = expected_clean
            .iter()
            .filter(|t| seen.insert(t.as_str()))
            .cloned()
            .collect();
        let documents = tweet_lines.len() + PAGES * POSTS_PER_PAGE;
        Fixture {
            tweet_lines,
            pages,
            expected_geo_ids,
            expected_malformed,
            expected_clean,
            expected_rejected,
            expected_dedup,
            documents,
        }
    }

    /// Writes `tweets.jsonl` and `forums/*.html` under `dir`.
    pub fn write(&self, dir: &Path) {
        std::fs::write(dir.join("tweets.jsonl"), self.tweet_lines.join("\n") + "\n").unwrap();
        let forums = dir.join("forums");
        std::fs::create_dir_all(&forums).unwrap();
        for (name, html) in &self.pages {
            std::fs::write(forums.join(name), html).unwrap();
        }
    }
}
