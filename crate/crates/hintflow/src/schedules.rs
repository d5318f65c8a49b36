//! Hint-ratio decay schedules and hint-conditioned prompt assembly.
//!
//! A schedule maps a training step to the fraction of a teacher trace that is
//! prepended to the question. All schedules clamp to zero past the horizon,
//! so late training always sees the bare question.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LangId;

/// Decay family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayKind {
    Cosine,
    Linear,
    Exponential,
}

/// A hint-ratio schedule: decay family, horizon, and (for the exponential
/// family) the rate constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySchedule {
    pub kind: DecayKind,
    pub horizon_t: u64,
    /// Rate constant for the exponential family; ignored otherwise.
    #[serde(default = "default_lambda")]
    pub rate_lambda: f64,
}

pub(crate) fn default_lambda() -> f64 {
    6.0
}

impl DecaySchedule {
    pub fn cosine(horizon_t: u64) -> Result<Self> {
        Self::new(DecayKind::Cosine, horizon_t, default_lambda())
    }

    pub fn linear(horizon_t: u64) -> Result<Self> {
        Self::new(DecayKind::Linear, horizon_t, default_lambda())
    }

    pub fn exponential(horizon_t: u64, rate_lambda: f64) -> Result<Self> {
        Self::new(DecayKind::Exponential, horizon_t, rate_lambda)
    }

    pub fn new(kind: DecayKind, horizon_t: u64, rate_lambda: f64) -> Result<Self> {
        let schedule = DecaySchedule { kind, horizon_t, rate_lambda };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon_t < 1 {
            return Err(Error::config("schedule.horizon_t: must be >= 1"));
        }
        if self.kind == DecayKind::Exponential
            && (!self.rate_lambda.is_finite() || self.rate_lambda <= 0.0)
        {
            return Err(Error::config("schedule.rate_lambda: must be > 0 for exponential decay"));
        }
        Ok(())
    }

    /// Hint ratio at step `t`, clamped to [0, 1]. Zero for every `t` past the
    /// horizon regardless of family.
    pub fn hint_ratio(&self, t: u64) -> f64 {
        if t > self.horizon_t {
            return 0.0;
        }
        let frac = t as f64 / self.horizon_t as f64;
        let p = match self.kind {
            DecayKind::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()),
            DecayKind::Linear => 1.0 - frac,
            DecayKind::Exponential => (-self.rate_lambda * frac).exp(),
        };
        p.clamp(0.0, 1.0)
    }
}

/// Number of teacher-trace tokens to prepend for a given ratio.
pub fn hint_prefix_len(ratio: f64, trace_len: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::domain(format!("hint ratio {ratio} outside [0, 1]")));
    }
    if trace_len == 0 {
        return Err(Error::domain("trace length must be >= 1"));
    }
    let k = (ratio * trace_len as f64).floor() as usize;
    Ok(k.min(trace_len))
}

/// A teacher-produced reasoning trace in the question's language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeacherTrace {
    pub tokens: Vec<u32>,
    pub language: LangId,
}

impl TeacherTrace {
    pub fn new(tokens: Vec<u32>, language: LangId) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::domain("teacher trace must contain at least one token"));
        }
        Ok(TeacherTrace { tokens, language })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A question with the first `k` teacher-trace tokens appended.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintedPrompt {
    pub question_tokens: Vec<u32>,
    pub language: LangId,
    pub hint_tokens: Vec<u32>,
    pub source_trace_len: usize,
}

impl HintedPrompt {
    pub fn hint_len(&self) -> usize {
        self.hint_tokens.len()
    }

    /// Full prompt token stream: question followed by the hint prefix.
    pub fn tokens(&self) -> Vec<u32> {
        let mut out = self.question_tokens.clone();
        out.extend_from_slice(&self.hint_tokens);
        out
    }
}

/// Concatenates a question with the first `k` tokens of its teacher trace.
pub fn build_hinted_prompt(
    question_tokens: &[u32],
    question_language: &LangId,
    trace: &TeacherTrace,
    k: usize,
) -> Result<HintedPrompt> {
    if k > trace.len() {
        return Err(Error::domain(format!(
            "hint prefix length {k} exceeds trace length {}",
            trace.len()
        )));
    }
    if &trace.language != question_language {
        return Err(Error::domain(format!(
            "teacher trace language `{}` does not match question language `{}`",
            trace.language, question_language
        )));
    }
    Ok(HintedPrompt {
        question_tokens: question_tokens.to_vec(),
        language: question_language.clone(),
        hint_tokens: trace.tokens[..k].to_vec(),
        source_trace_len: trace.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trace(n: usize) -> TeacherTrace {
        TeacherTrace::new((0..n as u32).collect(), "ko".into()).unwrap()
    }

    #[test]
    fn cosine_endpoints_and_midpoint() {
        let s = DecaySchedule::cosine(100).unwrap();
        assert!((s.hint_ratio(0) - 1.0).abs() < 1e-15);
        assert!((s.hint_ratio(50) - 0.5).abs() < 1e-15);
        assert_eq!(s.hint_ratio(150), 0.0);
        assert!(s.hint_ratio(100).abs() < 1e-15);
    }

    #[test]
    fn linear_quarter() {
        let s = DecaySchedule::linear(100).unwrap();
        assert!((s.hint_ratio(25) - 0.75).abs() < 1e-15);
        assert_eq!(s.hint_ratio(101), 0.0);
    }

    #[test]
    fn exponential_midpoint() {
        // exp(-6 * 50/100) = exp(-3)
        let s = DecaySchedule::exponential(100, 6.0).unwrap();
        let expected = (-3.0f64).exp();
        assert!((expected - 0.049787068367863944).abs() < 1e-15);
        assert!((s.hint_ratio(50) - expected).abs() < 1e-12);
        assert!((s.hint_ratio(0) - 1.0).abs() < 1e-15);
        assert_eq!(s.hint_ratio(101), 0.0);
    }

    #[test]
    fn exponential_needs_positive_lambda() {
        assert!(DecaySchedule::exponential(100, 0.0).is_err());
        assert!(DecaySchedule::new(DecayKind::Cosine, 0, 6.0).is_err());
    }

    #[test]
    fn prefix_len_examples() {
        assert_eq!(hint_prefix_len(0.37, 10).unwrap(), 3);
        assert_eq!(hint_prefix_len(1.0, 7).unwrap(), 7);
        assert_eq!(hint_prefix_len(0.0, 7).unwrap(), 0);
        assert!(hint_prefix_len(1.2, 7).is_err());
        assert!(hint_prefix_len(-0.1, 7).is_err());
    }

    #[test]
    fn hinted_prompt_prefix_rules() {
        let t = trace(4);
        let q = [100, 101];
        let p = build_hinted_prompt(&q, &"ko".into(), &t, 2).unwrap();
        assert_eq!(p.hint_tokens, vec![0, 1]);
        assert_eq!(p.tokens(), vec![100, 101, 0, 1]);

        let bare = build_hinted_prompt(&q, &"ko".into(), &t, 0).unwrap();
        assert_eq!(bare.tokens(), vec![100, 101]);

        let t5 = trace(5);
        let full = build_hinted_prompt(&q, &"ko".into(), &t5, 5).unwrap();
        assert_eq!(full.hint_tokens.len(), 5);

        assert!(build_hinted_prompt(&q, &"ko".into(), &t, 5).is_err());
        assert!(build_hinted_prompt(&q, &"en".into(), &t, 1).is_err());
    }

    #[test]
    fn stripping_question_recovers_prefix() {
        let t = trace(9);
        let q = [7, 8, 9];
        for k in 0..=9 {
            let p = build_hinted_prompt(&q, &"ko".into(), &t, k).unwrap();
            let toks = p.tokens();
            assert_eq!(&toks[q.len()..], &t.tokens[..k]);
        }
    }

    proptest! {
        #[test]
        fn ratio_monotone_nonincreasing(
            kind in prop_oneof![
                Just(DecayKind::Cosine),
                Just(DecayKind::Linear),
                Just(DecayKind::Exponential)
            ],
            horizon in 1u64..500,
            lambda in 0.1f64..20.0,
            t1 in 0u64..1000,
            dt in 0u64..1000,
        ) {
            let s = DecaySchedule::new(kind, horizon, lambda).unwrap();
            let t2 = t1 + dt;
            prop_assert!(s.hint_ratio(t1) + 1e-12 >= s.hint_ratio(t2));
        }

        #[test]
        fn ratio_one_at_zero_and_zero_after_horizon(
            kind in prop_oneof![
                Just(DecayKind::Cosine),
                Just(DecayKind::Linear),
                Just(DecayKind::Exponential)
            ],
            horizon in 1u64..500,
            lambda in 0.1f64..20.0,
            past in 1u64..100,
        ) {
            let s = DecaySchedule::new(kind, horizon, lambda).unwrap();
            prop_assert!((s.hint_ratio(0) - 1.0).abs() < 1e-12);
            prop_assert_eq!(s.hint_ratio(horizon + past), 0.0);
        }

        #[test]
        fn prefix_len_monotone_in_ratio(
            r1 in 0.0f64..=1.0,
            r2 in 0.0f64..=1.0,
            len in 1usize..200,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!(hint_prefix_len(lo, len).unwrap() <= hint_prefix_len(hi, len).unwrap());
        }
    }
}
