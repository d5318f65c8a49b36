//! Evaluation metrics over response corpora and arena outcomes: language
//! consistency ratio, accuracy, their conjunction, difficulty-weighted
//! accuracy, repetition, and response length.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LangId;
use crate::rewards::{
    check_format, check_language_consistency, split_response, strip_math, verify_answer,
    LanguageDetector,
};

/// Difficulty tier of an evaluation record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Low,
    Medium,
    High,
    Top,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Low, Tier::Medium, Tier::High, Tier::Top];

    pub fn index(&self) -> usize {
        match self {
            Tier::Low => 0,
            Tier::Medium => 1,
            Tier::High => 2,
            Tier::Top => 3,
        }
    }
}

/// One question/response pair with its gold answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question: String,
    #[serde(rename = "lang")]
    pub question_language: LangId,
    pub response: String,
    pub gold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
}

impl EvalRecord {
    pub fn validate(&self) -> Result<()> {
        if self.gold.trim().is_empty() {
            return Err(Error::domain("record gold answer must be nonempty"));
        }
        if !crate::lang::is_known_language(&self.question_language) {
            return Err(Error::Config(format!(
                "record question language `{}` is not a configured language",
                self.question_language
            )));
        }
        Ok(())
    }
}

/// Aggregate metrics. Reals are reported at 6 decimal places.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub lcr: f64,
    pub acc: f64,
    pub lc_acc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw_acc: Option<f64>,
    pub repeat: f64,
    pub mean_len: f64,
    pub count: usize,
}

impl MetricsRecord {
    /// Rounds every rate to 6 decimal places for reporting.
    pub fn rounded(&self) -> MetricsRecord {
        let r = |x: f64| (x * 1e6).round() / 1e6;
        MetricsRecord {
            lcr: r(self.lcr),
            acc: r(self.acc),
            lc_acc: r(self.lc_acc),
            dw_acc: self.dw_acc.map(r),
            repeat: r(self.repeat),
            mean_len: r(self.mean_len),
            count: self.count,
        }
    }
}

/// Per-record reward components, for `--per-record` output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordVerdict {
    pub r_lc: u8,
    pub r_format: u8,
    pub r_acc: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extracted: Option<String>,
}

/// Judges a single record.
pub fn judge_record(record: &EvalRecord, detector: &dyn LanguageDetector) -> RecordVerdict {
    let parts = split_response(&record.response);
    let r_lc = check_language_consistency(&parts, &record.question_language, detector);
    let r_format = check_format(&parts);
    let r_acc = parts
        .boxed
        .as_deref()
        .map(|b| verify_answer(b, &record.gold))
        .unwrap_or(false);
    RecordVerdict {
        r_lc: r_lc as u8,
        r_format: r_format as u8,
        r_acc: r_acc as u8,
        extracted: parts.boxed,
    }
}

/// Fraction of responses in the question's language.
pub fn lcr(records: &[EvalRecord], detector: &dyn LanguageDetector) -> Result<f64> {
    nonempty(records)?;
    let hits = records
        .iter()
        .filter(|r| judge_record(r, detector).r_lc == 1)
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Fraction of records whose extracted answer verifies, regardless of
/// response language.
pub fn accuracy(records: &[EvalRecord]) -> Result<f64> {
    nonempty(records)?;
    let detector = NullDetector;
    let hits = records
        .iter()
        .filter(|r| judge_record(r, &detector).r_acc == 1)
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// Fraction of records that are both language-consistent and correct.
pub fn lc_and_acc(records: &[EvalRecord], detector: &dyn LanguageDetector) -> Result<f64> {
    nonempty(records)?;
    let hits = records
        .iter()
        .map(|r| judge_record(r, detector))
        .filter(|v| v.r_lc == 1 && v.r_acc == 1)
        .count();
    Ok(hits as f64 / records.len() as f64)
}

fn nonempty(records: &[EvalRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::domain("metric undefined on an empty record set"))
    } else {
        Ok(())
    }
}

/// Language detector that never identifies anything; used where language is
/// irrelevant (plain accuracy).
struct NullDetector;

impl LanguageDetector for NullDetector {
    fn detect(&self, _text: &str) -> Option<LangId> {
        None
    }
}

/// Difficulty-weighted accuracy with weights 1:2:4:8 over
/// (low, medium, high, top) tier accuracies.
pub fn dw_acc(tier_accuracies: [f64; 4]) -> Result<f64> {
    for (i, a) in tier_accuracies.iter().enumerate() {
        if !(0.0..=1.0).contains(a) {
            return Err(Error::domain(format!(
                "tier accuracy {a} at index {i} outside [0, 1]"
            )));
        }
    }
    let weighted: f64 = tier_accuracies
        .iter()
        .enumerate()
        .map(|(i, a)| (1u32 << i) as f64 * a)
        .sum();
    Ok(weighted / 15.0)
}

/// Weighted n-gram repetition rate over whitespace tokens after math
/// stripping. Texts with fewer than `n` tokens score 0.
pub fn repeat_score(text: &str, n: usize, w: f64) -> f64 {
    assert!(n >= 1, "repeat_score: n must be >= 1");
    assert!(w > 0.0, "repeat_score: w must be > 0");
    let stripped = strip_math(text);
    let tokens: Vec<&str> = stripped.split_whitespace().collect();
    repeat_score_tokens(&tokens, n, w)
}

/// Repetition rate over an already-tokenized sequence.
pub fn repeat_score_tokens<T: std::hash::Hash + Eq>(tokens: &[T], n: usize, w: f64) -> f64 {
    if tokens.len() < n {
        return 0.0;
    }
    let mut freq: HashMap<Vec<&T>, u64> = HashMap::new();
    for window in tokens.windows(n) {
        *freq.entry(window.iter().collect()).or_insert(0) += 1;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &f in freq.values() {
        let fw = (f as f64).powf(w);
        den += fw;
        if f > 1 {
            num += fw;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Mean whitespace-token length of raw responses.
pub fn mean_response_length(records: &[EvalRecord]) -> Result<f64> {
    nonempty(records)?;
    let total: usize = records
        .iter()
        .map(|r| r.response.split_whitespace().count())
        .sum();
    Ok(total as f64 / records.len() as f64)
}

/// Full corpus report: LCR, Acc, LC&Acc, DW-ACC when all four tiers are
/// present, mean repeat score, and mean length.
pub fn evaluate_records(
    records: &[EvalRecord],
    detector: &dyn LanguageDetector,
) -> Result<MetricsRecord> {
    nonempty(records)?;
    let verdicts: Vec<RecordVerdict> = records.iter().map(|r| judge_record(r, detector)).collect();
    let count = records.len() as f64;
    let lcr = verdicts.iter().filter(|v| v.r_lc == 1).count() as f64 / count;
    let acc = verdicts.iter().filter(|v| v.r_acc == 1).count() as f64 / count;
    let lc_acc =
        verdicts.iter().filter(|v| v.r_lc == 1 && v.r_acc == 1).count() as f64 / count;

    let mut tier_total = [0usize; 4];
    let mut tier_correct = [0usize; 4];
    for (r, v) in records.iter().zip(&verdicts) {
        if let Some(t) = r.tier {
            tier_total[t.index()] += 1;
            tier_correct[t.index()] += v.r_acc as usize;
        }
    }
    let dw = if tier_total.iter().all(|&t| t > 0) {
        let accs = [0, 1, 2, 3].map(|i| tier_correct[i] as f64 / tier_total[i] as f64);
        Some(dw_acc(accs)?)
    } else {
        None
    };

    let repeat =
        records.iter().map(|r| repeat_score(&r.response, 1, 1.0)).sum::<f64>() / count;
    let mean_len = mean_response_length(records)?;

    Ok(MetricsRecord { lcr, acc, lc_acc, dw_acc: dw, repeat, mean_len, count: records.len() })
}
