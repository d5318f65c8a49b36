//! Built-in language identification: Unicode script histogram plus small
//! function-word lists to tell Latin-script languages apart.
//!
//! Math spans are stripped before counting, so a boxed-only tail detects as
//! nothing. Below five countable characters the detector abstains.

use crate::lang::LangId;
use crate::rewards::{strip_math, LanguageDetector};

const MIN_COUNTABLE: usize = 5;

/// Script buckets the detector distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Script {
    Latin,
    Han,
    Kana,
    Hangul,
    Cyrillic,
    Arabic,
    Bengali,
    Thai,
    Telugu,
}

fn script_of(c: char) -> Option<Script> {
    let u = c as u32;
    match u {
        0x0041..=0x005A | 0x0061..=0x007A => Some(Script::Latin),
        0x00C0..=0x024F if c.is_alphabetic() => Some(Script::Latin),
        0x1E00..=0x1EFF => Some(Script::Latin), // Latin Extended Additional (Vietnamese)
        0x0400..=0x04FF => Some(Script::Cyrillic),
        0x0600..=0x06FF | 0x0750..=0x077F | 0x08A0..=0x08FF => Some(Script::Arabic),
        0x0980..=0x09FF => Some(Script::Bengali),
        0x0C00..=0x0C7F => Some(Script::Telugu),
        0x0E00..=0x0E7F => Some(Script::Thai),
        0x3040..=0x309F | 0x30A0..=0x30FF | 0x31F0..=0x31FF => Some(Script::Kana),
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF => Some(Script::Han),
        0xAC00..=0xD7AF | 0x1100..=0x11FF | 0x3130..=0x318F => Some(Script::Hangul),
        _ => None,
    }
}

/// Codepoints that effectively only occur in Vietnamese orthography.
fn is_vietnamese_mark(c: char) -> bool {
    matches!(c as u32, 0x1EA0..=0x1EF9)
        || matches!(c, 'ă' | 'Ă' | 'ơ' | 'Ơ' | 'ư' | 'Ư' | 'đ' | 'Đ')
}

const LATIN_LANGS: [&str; 9] = ["de", "en", "es", "fr", "id", "it", "pt", "sw", "vi"];

fn function_words(lang: &str) -> &'static [&'static str] {
    match lang {
        "en" => &["the", "and", "of", "to", "is", "in", "that", "it", "for", "are", "was", "this", "with", "answer"],
        "de" => &["der", "die", "das", "und", "ist", "nicht", "ein", "eine", "zu", "mit", "von", "den", "im", "wir"],
        "fr" => &["le", "la", "les", "et", "est", "une", "un", "des", "du", "que", "pour", "dans", "nous", "donc"],
        "es" => &["el", "los", "las", "es", "y", "una", "de", "que", "en", "por", "para", "como", "pero"],
        "pt" => &["o", "os", "as", "é", "e", "um", "uma", "que", "em", "para", "não", "com", "mas", "isso"],
        "it" => &["il", "lo", "gli", "è", "e", "un", "una", "di", "che", "per", "non", "con", "quindi"],
        "vi" => &["và", "là", "của", "có", "không", "trong", "được", "với", "này", "cho", "một", "ta"],
        "sw" => &["na", "ya", "wa", "kwa", "ni", "za", "la", "katika", "hii", "kwamba", "ili", "hivyo"],
        "id" => &["yang", "dan", "di", "ini", "itu", "dengan", "untuk", "tidak", "dari", "adalah", "pada", "kita"],
        _ => &[],
    }
}

/// Deterministic script-histogram detector.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptDetector;

impl ScriptDetector {
    pub fn new() -> Self {
        ScriptDetector
    }
}

impl LanguageDetector for ScriptDetector {
    fn detect(&self, text: &str) -> Option<LangId> {
        let stripped = strip_math(text);

        let mut latin = 0usize;
        let mut han = 0usize;
        let mut kana = 0usize;
        let mut hangul = 0usize;
        let mut cyrillic = 0usize;
        let mut arabic = 0usize;
        let mut bengali = 0usize;
        let mut thai = 0usize;
        let mut telugu = 0usize;
        let mut viet_marks = 0usize;

        for c in stripped.chars() {
            if let Some(script) = script_of(c) {
                match script {
                    Script::Latin => {
                        latin += 1;
                        if is_vietnamese_mark(c) {
                            viet_marks += 1;
                        }
                    }
                    Script::Han => han += 1,
                    Script::Kana => kana += 1,
                    Script::Hangul => hangul += 1,
                    Script::Cyrillic => cyrillic += 1,
                    Script::Arabic => arabic += 1,
                    Script::Bengali => bengali += 1,
                    Script::Thai => thai += 1,
                    Script::Telugu => telugu += 1,
                }
            }
        }

        let countable =
            latin + han + kana + hangul + cyrillic + arabic + bengali + thai + telugu;
        if countable < MIN_COUNTABLE {
            return None;
        }

        // Kana anywhere pulls Han characters into the Japanese bucket.
        let (ja, zh) = if kana > 0 { (kana + han, 0) } else { (0, han) };

        let buckets: [(&str, usize); 9] = [
            ("ar", arabic),
            ("bn", bengali),
            ("ja", ja),
            ("ko", hangul),
            ("ru", cyrillic),
            ("te", telugu),
            ("th", thai),
            ("zh", zh),
            ("latin", latin),
        ];
        let (winner, count) = buckets
            .iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
            .copied()
            .unwrap();
        if count == 0 {
            return None;
        }
        if winner != "latin" {
            return Some(LangId::new(winner));
        }
        resolve_latin(&stripped, viet_marks)
    }
}

fn resolve_latin(stripped: &str, viet_marks: usize) -> Option<LangId> {
    let words: Vec<String> = stripped
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect();

    let mut best: Option<(&str, usize)> = None;
    for lang in LATIN_LANGS {
        let table = function_words(lang);
        let mut hits = words.iter().filter(|w| table.contains(&w.as_str())).count();
        if lang == "vi" {
            hits += viet_marks;
        }
        if hits > 0 {
            best = match best {
                Some((_, b)) if b >= hits => best,
                _ => Some((lang, hits)),
            };
        }
    }
    best.map(|(lang, _)| LangId::new(lang))
}
