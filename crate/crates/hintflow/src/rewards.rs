//! Conjunctive language/format/accuracy reward over text responses.
//!
//! A response earns reward 1 only when it carries a `<think>...</think>`
//! trace with a boxed final answer, stays in the question's language, and the
//! extracted answer verifies against the gold answer.

use serde::{Deserialize, Serialize};

use crate::lang::LangId;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";
const BOXED: &str = "\\boxed";

/// Numeric comparison tolerance used by the rule-based verifier.
pub const ANSWER_ABS_TOL: f64 = 1e-9;

/// A response split at the thinking tags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseParts {
    pub raw: String,
    /// Text inside the thinking tags; empty when the tags are missing.
    pub trace: String,
    /// Text after the closing tag, or the whole response when malformed.
    pub tail: String,
    /// Content of the last balanced boxed expression in the tail.
    pub boxed: Option<String>,
    /// Set when either thinking tag is missing or out of order.
    pub malformed: bool,
}

/// The three binary reward components and their conjunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_lc: bool,
    pub r_format: bool,
    pub r_acc: bool,
    pub r: bool,
}

impl RewardBreakdown {
    pub fn new(r_lc: bool, r_format: bool, r_acc: bool) -> Self {
        RewardBreakdown { r_lc, r_format, r_acc, r: composite_reward(r_lc, r_format, r_acc) }
    }
}

/// Conjunction of the three components.
pub fn composite_reward(r_lc: bool, r_format: bool, r_acc: bool) -> bool {
    r_lc && r_format && r_acc
}

/// Pluggable language identification. Implementations must be deterministic
/// and return `None` on empty or script-free input.
pub trait LanguageDetector: Send + Sync {
    fn detect(&self, text: &str) -> Option<LangId>;
}

/// Splits a response at the first `<think>` and the first `</think>` after
/// it. Missing tags flag the parts as malformed with the whole response as
/// the tail.
pub fn split_response(raw: &str) -> ResponseParts {
    let open = raw.find(THINK_OPEN);
    let close = open.and_then(|o| {
        let start = o + THINK_OPEN.len();
        raw[start..].find(THINK_CLOSE).map(|c| start + c)
    });
    match (open, close) {
        (Some(o), Some(c)) => {
            let trace = raw[o + THINK_OPEN.len()..c].to_string();
            let tail = raw[c + THINK_CLOSE.len()..].to_string();
            let boxed = extract_boxed(&tail);
            ResponseParts { raw: raw.to_string(), trace, tail, boxed, malformed: false }
        }
        _ => ResponseParts {
            raw: raw.to_string(),
            trace: String::new(),
            tail: raw.to_string(),
            boxed: extract_boxed(raw),
            malformed: true,
        },
    }
}

/// Format reward: thinking tags present in order and a balanced boxed
/// expression in the tail.
pub fn check_format(parts: &ResponseParts) -> bool {
    !parts.malformed && parts.boxed.is_some()
}

/// Extracts the content of the last balanced `\boxed{...}` expression.
pub fn extract_boxed(text: &str) -> Option<String> {
    let start = text.rfind(BOXED)?;
    let rest = &text[start + BOXED.len()..];
    let mut chars = rest.char_indices().peekable();
    // skip whitespace between the marker and the opening brace
    let open = loop {
        let (i, c) = chars.next()?;
        if c.is_whitespace() {
            continue;
        }
        if c == '{' {
            break i;
        }
        return None;
    };
    let mut depth = 1usize;
    for (i, c) in chars {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(rest[open + 1..i].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

/// Language-consistency reward: the trace must detect as the question's
/// language and the tail must detect as that language or as nothing at all
/// (a math-only tail strips to nothing and stays consistent).
pub fn check_language_consistency(
    parts: &ResponseParts,
    question_lang: &LangId,
    detector: &dyn LanguageDetector,
) -> bool {
    if parts.malformed {
        return false;
    }
    if detector.detect(&parts.trace).as_ref() != Some(question_lang) {
        return false;
    }
    match detector.detect(&parts.tail) {
        Some(lang) => &lang == question_lang,
        None => true,
    }
}

/// Rule-based answer verification: normalize both sides, compare numerically
/// when both parse as numbers (absolute tolerance 1e-9), otherwise compare
/// the normalized strings.
pub fn verify_answer(extracted: &str, gold: &str) -> bool {
    let a = normalize_answer(extracted);
    let b = normalize_answer(gold);
    match (parse_number(&a), parse_number(&b)) {
        (Some(x), Some(y)) => (x - y).abs() <= ANSWER_ABS_TOL,
        _ => !a.is_empty() && a == b,
    }
}

fn normalize_answer(text: &str) -> String {
    let mut s = text.trim().to_string();
    loop {
        let before = s.clone();
        s = s.trim().to_string();
        // enclosing dollar signs
        while s.len() >= 2 && s.starts_with('$') && s.ends_with('$') {
            s = s[1..s.len() - 1].trim().to_string();
        }
        for wrapper in ["\\text", "\\mathrm", "\\textbf", "\\mathbf", "\\mathit"] {
            if let Some(inner) = unwrap_command(&s, wrapper) {
                s = inner.trim().to_string();
            }
        }
        if let Some(inner) = strip_enclosing_braces(&s) {
            s = inner.trim().to_string();
        }
        if s == before {
            break;
        }
    }
    for frac in ["\\dfrac", "\\tfrac", "\\frac"] {
        if let Some((num, den)) = split_frac(&s, frac) {
            s = format!("{}/{}", num.trim(), den.trim());
            break;
        }
    }
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `\cmd{inner}` spanning the whole string -> `inner`.
fn unwrap_command(s: &str, cmd: &str) -> Option<String> {
    let body = s.strip_prefix(cmd)?.trim_start();
    let inner = body.strip_prefix('{')?;
    let close = matching_brace(inner)?;
    if inner[close + 1..].trim().is_empty() {
        Some(inner[..close].to_string())
    } else {
        None
    }
}

/// `{inner}` spanning the whole string -> `inner`.
fn strip_enclosing_braces(s: &str) -> Option<String> {
    let inner = s.strip_prefix('{')?;
    let close = matching_brace(inner)?;
    if inner[close + 1..].is_empty() {
        Some(inner[..close].to_string())
    } else {
        None
    }
}

/// `\frac{a}{b}` spanning the whole string -> (a, b).
fn split_frac(s: &str, cmd: &str) -> Option<(String, String)> {
    let body = s.strip_prefix(cmd)?.trim_start();
    let first = body.strip_prefix('{')?;
    let c1 = matching_brace(first)?;
    let num = &first[..c1];
    let rest = first[c1 + 1..].trim_start();
    let second = rest.strip_prefix('{')?;
    let c2 = matching_brace(second)?;
    if second[c2 + 1..].trim().is_empty() {
        Some((num.to_string(), second[..c2].to_string()))
    } else {
        None
    }
}

/// Byte index of the brace closing an already-opened group at depth 1.
fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 1usize;
    for (i, c) in s.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses decimals and simple rationals ("0.5", "-3", "1/2").
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let (num, den) = s.split_once('/')?;
    let n: f64 = num.trim().parse().ok()?;
    let d: f64 = den.trim().parse().ok()?;
    if d == 0.0 || !n.is_finite() || !d.is_finite() {
        return None;
    }
    Some(n / d)
}

/// Removes math spans, boxed expressions, backslash commands, and isolated
/// symbol runs, leaving natural-language text.
pub fn strip_math(text: &str) -> String {
    let mut s = remove_delimited(text, "$$", "$$");
    s = remove_delimited(&s, "\\[", "\\]");
    s = remove_delimited(&s, "\\(", "\\)");
    s = remove_delimited(&s, "$", "$");
    s = remove_boxed_spans(&s);
    // drop whitespace-delimited runs with no alphabetic content, and strip
    // backslash commands inside surviving tokens
    let mut out = String::with_capacity(s.len());
    let mut token = String::new();
    for c in s.chars().chain(std::iter::once(' ')) {
        if c.is_whitespace() {
            if !token.is_empty() {
                let cleaned = clean_token(&token);
                out.push_str(&cleaned);
                token.clear();
            }
            out.push(c);
        } else {
            token.push(c);
        }
    }
    out.pop(); // the sentinel space
    out
}

fn clean_token(token: &str) -> String {
    // remove \command names first; "\frac" -> "", "\text" -> ""
    let mut no_cmd = String::with_capacity(token.len());
    let mut chars = token.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            while chars.peek().is_some_and(|n| n.is_ascii_alphabetic()) {
                chars.next();
            }
        } else {
            no_cmd.push(c);
        }
    }
    if no_cmd.chars().any(|c| c.is_alphabetic()) {
        no_cmd
    } else {
        String::new()
    }
}

fn remove_delimited(text: &str, open: &str, close: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        match rest.find(open) {
            Some(start) => {
                let after = &rest[start + open.len()..];
                match after.find(close) {
                    Some(end) => {
                        out.push_str(&rest[..start]);
                        rest = &after[end + close.len()..];
                    }
                    None => {
                        out.push_str(rest);
                        return out;
                    }
                }
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

fn remove_boxed_spans(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find(BOXED) {
        let after_marker = &rest[start + BOXED.len()..];
        let trimmed = after_marker.trim_start();
        let skipped = after_marker.len() - trimmed.len();
        if let Some(body) = trimmed.strip_prefix('{') {
            if let Some(close) = matching_brace(body) {
                out.push_str(&rest[..start]);
                rest = &body[close + 1..];
                continue;
            }
        }
        // unbalanced or brace-less marker: drop the marker itself only
        out.push_str(&rest[..start]);
        rest = &after_marker[skipped..];
    }
    out.push_str(rest);
    out
}
