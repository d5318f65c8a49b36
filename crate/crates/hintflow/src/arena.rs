//! Synthetic multilingual reasoning arena.
//!
//! Tasks carry a language, a difficulty tier, a task family, a correct answer
//! and a teacher trace. The policy generates outcomes through four factored
//! decisions; hint prefixes act as prompt features that add logit bonuses
//! proportional to the hint fraction `k/L`. Language detection inside the
//! arena is exact because vocabulary subspaces are disjoint.
//!
//! The answer factor is sampled in slot space: slot 0 always denotes the
//! task's correct answer and slot `s` maps to answer `(correct + s) mod K`.
//! This keeps per-(language, family) competence learnable even though
//! concrete correct answers are drawn uniformly per task.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::LangId;
use crate::policy::{log_sigmoid, log_softmax, sigmoid, softmax, PolicyParams};
use crate::rewards::RewardBreakdown;
use crate::schedules::TeacherTrace;

/// Tokens a task's question occupies in its language subspace.
pub const QUESTION_LEN: usize = 4;

/// Structural tokens in a serialized outcome (tag open, tag close, answer).
pub const STRUCTURAL_TOKENS: usize = 3;

/// Per-language configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageSpec {
    pub id: LangId,
    /// Size of this language's private vocabulary subspace.
    pub vocab_size: usize,
    /// Initial competence offset added to the correct-answer slot logit.
    pub competence: f64,
}

/// Arena configuration: languages, difficulty profile, hint gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArenaSpec {
    pub languages: Vec<LanguageSpec>,
    /// Index of the drift target (the high-resource pivot).
    pub pivot_language: usize,
    /// Logit bonus toward reasoning in the pivot, applied at every sample.
    pub drift_bias: f64,
    /// Per-tier logit penalties on the correct-answer slot.
    pub tier_offsets: Vec<f64>,
    /// Answers per task (K).
    pub answers_per_task: usize,
    /// Task families per language.
    pub families: usize,
    /// Content length m; teacher traces share this length.
    pub trace_len: usize,
    /// Hint gain on the task-language logit.
    pub hint_lang_gain: f64,
    /// Hint gain on the correct-answer slot logit.
    pub hint_ans_gain: f64,
    /// Initial format logit of a fresh policy.
    pub format_init: f64,
}

impl Default for ArenaSpec {
    fn default() -> Self {
        let lang = |id: &str, competence: f64| LanguageSpec {
            id: LangId::new(id),
            vocab_size: 16,
            competence,
        };
        ArenaSpec {
            languages: vec![
                lang("en", 2.0),
                lang("de", 1.5),
                lang("ja", 0.5),
                lang("zh", 0.5),
                lang("th", -0.5),
                lang("sw", -0.5),
            ],
            pivot_language: 0,
            drift_bias: 2.5,
            tier_offsets: vec![0.0, 0.5, 1.0, 1.5],
            answers_per_task: 8,
            families: 4,
            trace_len: 12,
            hint_lang_gain: 4.0,
            hint_ans_gain: 4.0,
            format_init: -3.0,
        }
    }
}

impl ArenaSpec {
    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() {
            return Err(Error::config("arena.languages: must not be empty"));
        }
        for (i, a) in self.languages.iter().enumerate() {
            if a.vocab_size == 0 {
                return Err(Error::config(format!(
                    "arena.languages[{i}].vocab_size: must be >= 1"
                )));
            }
            if !a.competence.is_finite() {
                return Err(Error::config(format!(
                    "arena.languages[{i}].competence: must be finite"
                )));
            }
            for b in &self.languages[..i] {
                if a.id == b.id {
                    return Err(Error::config(format!(
                        "arena.languages: duplicate language id `{}`",
                        a.id
                    )));
                }
            }
        }
        if self.pivot_language >= self.languages.len() {
            return Err(Error::config("arena.pivot_language: index out of range"));
        }
        if self.answers_per_task < 2 {
            return Err(Error::config("arena.answers_per_task: must be >= 2"));
        }
        if self.families < 1 {
            return Err(Error::config("arena.families: must be >= 1"));
        }
        if self.trace_len < 1 {
            return Err(Error::config("arena.trace_len: must be >= 1"));
        }
        if self.tier_offsets.is_empty() {
            return Err(Error::config("arena.tier_offsets: must not be empty"));
        }
        for (i, d) in self.tier_offsets.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::config(format!("arena.tier_offsets[{i}]: must be finite")));
            }
        }
        for (key, v) in [
            ("arena.drift_bias", self.drift_bias),
            ("arena.hint_lang_gain", self.hint_lang_gain),
            ("arena.hint_ans_gain", self.hint_ans_gain),
            ("arena.format_init", self.format_init),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("{key}: must be finite")));
            }
        }
        Ok(())
    }

    pub fn n_languages(&self) -> usize {
        self.languages.len()
    }

    pub fn tiers(&self) -> usize {
        self.tier_offsets.len()
    }

    pub fn language_ids(&self) -> Vec<LangId> {
        self.languages.iter().map(|l| l.id.clone()).collect()
    }

    pub fn language_index(&self, id: &LangId) -> Option<usize> {
        self.languages.iter().position(|l| &l.id == id)
    }

    /// First global token id of a language's subspace.
    pub fn token_offset(&self, lang: usize) -> u32 {
        self.languages[..lang].iter().map(|l| l.vocab_size as u32).sum()
    }

    /// Language owning a global token id, if any.
    pub fn token_owner(&self, token: u32) -> Option<usize> {
        let mut start = 0u32;
        for (i, l) in self.languages.iter().enumerate() {
            let end = start + l.vocab_size as u32;
            if (start..end).contains(&token) {
                return Some(i);
            }
            start = end;
        }
        None
    }

    #[cfg(test)]
    pub fn small_test_spec() -> Self {
        let lang = |id: &str, competence: f64| LanguageSpec {
            id: LangId::new(id),
            vocab_size: 4,
            competence,
        };
        ArenaSpec {
            languages: vec![lang("en", 0.5), lang("th", -0.5)],
            pivot_language: 0,
            drift_bias: 1.0,
            tier_offsets: vec![0.0, 0.5],
            answers_per_task: 4,
            families: 2,
            trace_len: 3,
            hint_lang_gain: 2.0,
            hint_ans_gain: 2.0,
            format_init: 0.0,
        }
    }
}

/// One training/evaluation instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    /// Index into the arena's language list.
    pub language: usize,
    pub tier: usize,
    pub family: usize,
    pub correct_answer: usize,
    pub question_tokens: Vec<u32>,
    pub teacher: TeacherTrace,
}

impl Task {
    pub fn trace_len(&self) -> usize {
        self.teacher.len()
    }
}

/// One sampled response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub well_formed: bool,
    pub reasoning_language: usize,
    pub content_tokens: Vec<u32>,
    /// Concrete answer index in [0, K).
    pub answer: usize,
    /// Factored log-probability under the sampling policy, hint bonuses
    /// included (they are prompt features shared by old and new policies).
    pub logprob_old: f64,
}

impl Outcome {
    /// Serialized token count: tags + content + answer.
    pub fn token_len(&self) -> usize {
        self.content_tokens.len() + STRUCTURAL_TOKENS
    }
}

/// Independent RNG stream keyed by up to four words; identical keys give
/// identical streams regardless of scheduling.
pub fn stream_rng(a: u64, b: u64, c: u64, d: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut state = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(b.rotate_left(17))
        .wrapping_add(c.rotate_left(33))
        .wrapping_add(d.rotate_left(49));
    for chunk in seed.chunks_mut(8) {
        state = splitmix64(&mut state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn draw_task(spec: &ArenaSpec, id: u64, rng: &mut impl Rng) -> Task {
    let language = rng.gen_range(0..spec.n_languages());
    let tier = rng.gen_range(0..spec.tiers());
    let family = rng.gen_range(0..spec.families);
    let correct_answer = rng.gen_range(0..spec.answers_per_task);
    draw_task_fields(spec, id, language, tier, family, correct_answer, rng)
}

fn draw_task_fields(
    spec: &ArenaSpec,
    id: u64,
    language: usize,
    tier: usize,
    family: usize,
    correct_answer: usize,
    rng: &mut impl Rng,
) -> Task {
    let offset = spec.token_offset(language);
    let vocab = spec.languages[language].vocab_size as u32;
    let question_tokens = (0..QUESTION_LEN).map(|_| offset + rng.gen_range(0..vocab)).collect();
    let trace_tokens: Vec<u32> =
        (0..spec.trace_len).map(|_| offset + rng.gen_range(0..vocab)).collect();
    let teacher = TeacherTrace::new(trace_tokens, spec.languages[language].id.clone())
        .expect("trace_len >= 1 by validation");
    Task { id, language, tier, family, correct_answer, question_tokens, teacher }
}

/// Draws `count` tasks with uniform language/tier/family/answer, determined
/// entirely by `seed`.
pub fn make_tasks(spec: &ArenaSpec, count: usize, seed: u64) -> Result<Vec<Task>> {
    if count == 0 {
        return Err(Error::domain("task count must be >= 1"));
    }
    let mut rng = stream_rng(seed, 0x7461_736b, 0, 0); // "task" stream
    Ok((0..count as u64).map(|id| draw_task(spec, id, &mut rng)).collect())
}

/// Draws one training batch for a step from a step-keyed stream; task ids are
/// globally unique across steps.
pub fn make_batch_tasks(spec: &ArenaSpec, count: usize, seed: u64, step: u64) -> Result<Vec<Task>> {
    if count == 0 {
        return Err(Error::domain("task count must be >= 1"));
    }
    let mut rng = stream_rng(seed, 0x7461_736b, step.wrapping_add(1), 0);
    let base = step * count as u64;
    Ok((0..count as u64).map(|i| draw_task(spec, base + i, &mut rng)).collect())
}

/// Evaluation task set, stratified over the language x tier grid by cycling,
/// so every cell is covered as evenly as `count` allows.
pub fn make_eval_tasks(spec: &ArenaSpec, count: usize, seed: u64) -> Result<Vec<Task>> {
    if count == 0 {
        return Err(Error::domain("eval task count must be >= 1"));
    }
    let mut rng = stream_rng(seed, 0x6576_616c, 0, 0); // "eval" stream
    Ok((0..count as u64)
        .map(|id| {
            let cell = id as usize;
            let language = cell % spec.n_languages();
            let tier = (cell / spec.n_languages()) % spec.tiers();
            let family = rng.gen_range(0..spec.families);
            let correct = rng.gen_range(0..spec.answers_per_task);
            draw_task_fields(spec, id, language, tier, family, correct, &mut rng)
        })
        .collect())
}

/// Hint fraction `k / L` for a task.
fn hint_fraction(task: &Task, k: usize) -> f64 {
    k as f64 / task.trace_len() as f64
}

/// Reasoning-language logits for a task at hint length `k`: learned row plus
/// the drift bias on the pivot and the hint gain on the task language.
pub fn lang_factor_logits(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    task: &Task,
    k: usize,
) -> Vec<f64> {
    let mut logits = policy.lang_logits[task.language].clone();
    logits[spec.pivot_language] += spec.drift_bias;
    logits[task.language] += spec.hint_lang_gain * hint_fraction(task, k);
    logits
}

/// Answer-slot logits for a task at hint length `k` under a given reasoning
/// language: learned row minus the tier penalty plus the hint gain, both on
/// slot 0 (the correct answer).
pub fn answer_factor_logits(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    task: &Task,
    reasoning_language: usize,
    k: usize,
) -> Vec<f64> {
    let mut logits = policy.answer_logits[reasoning_language][task.family].clone();
    logits[0] += spec.hint_ans_gain * hint_fraction(task, k) - spec.tier_offsets[task.tier];
    logits
}

pub fn slot_of_answer(spec: &ArenaSpec, task: &Task, answer: usize) -> usize {
    (answer + spec.answers_per_task - task.correct_answer) % spec.answers_per_task
}

pub fn answer_of_slot(spec: &ArenaSpec, task: &Task, slot: usize) -> usize {
    (task.correct_answer + slot) % spec.answers_per_task
}

/// Samples one outcome from the hint-conditioned policy.
pub fn rollout(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    task: &Task,
    k: usize,
    rng: &mut impl Rng,
) -> Outcome {
    let mut logprob = 0.0;

    let p_wf = sigmoid(policy.format_logit);
    let well_formed = rng.gen::<f64>() < p_wf;
    logprob += if well_formed {
        log_sigmoid(policy.format_logit)
    } else {
        log_sigmoid(-policy.format_logit)
    };

    let lang_logits = lang_factor_logits(policy, spec, task, k);
    let lang_probs = softmax(&lang_logits);
    let reasoning_language = sample_categorical(&lang_probs, rng);
    logprob += log_softmax(&lang_logits)[reasoning_language];

    let token_row = &policy.token_logits[reasoning_language];
    let token_probs = softmax(token_row);
    let token_lp = log_softmax(token_row);
    let offset = spec.token_offset(reasoning_language);
    let content_tokens: Vec<u32> = (0..spec.trace_len)
        .map(|_| {
            let t = sample_categorical(&token_probs, rng);
            logprob += token_lp[t];
            offset + t as u32
        })
        .collect();

    let ans_logits = answer_factor_logits(policy, spec, task, reasoning_language, k);
    let ans_probs = softmax(&ans_logits);
    let slot = sample_categorical(&ans_probs, rng);
    logprob += log_softmax(&ans_logits)[slot];

    Outcome {
        well_formed,
        reasoning_language,
        content_tokens,
        answer: answer_of_slot(spec, task, slot),
        logprob_old: logprob,
    }
}

/// Scores an outcome with the conjunctive reward. Language detection is
/// exact: the reasoning language is compared directly against the task's.
pub fn score_outcome(outcome: &Outcome, task: &Task) -> RewardBreakdown {
    RewardBreakdown::new(
        outcome.reasoning_language == task.language,
        outcome.well_formed,
        outcome.answer == task.correct_answer,
    )
}

/// Exact expected conjunctive reward by enumerating the format and language
/// factors; content tokens never affect the reward and marginalize out.
pub fn expected_reward(policy: &PolicyParams, spec: &ArenaSpec, task: &Task, k: usize) -> f64 {
    let p_wf = sigmoid(policy.format_logit);
    let lang_probs = softmax(&lang_factor_logits(policy, spec, task, k));
    let p_lang = lang_probs[task.language];
    let ans_probs = softmax(&answer_factor_logits(policy, spec, task, task.language, k));
    p_wf * p_lang * ans_probs[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> ArenaSpec {
        ArenaSpec::small_test_spec()
    }

    #[test]
    fn default_spec_validates() {
        ArenaSpec::default().validate().unwrap();
    }

    #[test]
    fn token_subspaces_are_disjoint() {
        let spec = ArenaSpec::default();
        let total: usize = spec.languages.iter().map(|l| l.vocab_size).sum();
        for t in 0..total as u32 {
            let owner = spec.token_owner(t).unwrap();
            let off = spec.token_offset(owner);
            assert!(t >= off && t < off + spec.languages[owner].vocab_size as u32);
        }
        assert_eq!(spec.token_owner(total as u32), None);
    }

    #[test]
    fn make_tasks_is_deterministic() {
        let spec = spec();
        let a = make_tasks(&spec, 20, 7).unwrap();
        let b = make_tasks(&spec, 20, 7).unwrap();
        assert_eq!(a, b);
        let c = make_tasks(&spec, 20, 8).unwrap();
        assert_ne!(a, c);
        assert!(make_tasks(&spec, 0, 7).is_err());
    }

    #[test]
    fn tasks_respect_language_subspaces() {
        let spec = spec();
        for task in make_tasks(&spec, 50, 3).unwrap() {
            for &t in task.teacher.tokens.iter().chain(task.question_tokens.iter()) {
                assert_eq!(spec.token_owner(t), Some(task.language));
            }
            assert_eq!(task.teacher.language, spec.languages[task.language].id);
            assert_eq!(task.teacher.len(), spec.trace_len);
        }
    }

    #[test]
    fn eval_tasks_stratified_over_language_tier_grid() {
        let spec = ArenaSpec::default();
        let tasks = make_eval_tasks(&spec, 240, 11).unwrap();
        let mut cells = std::collections::HashMap::new();
        for t in &tasks {
            *cells.entry((t.language, t.tier)).or_insert(0usize) += 1;
        }
        assert_eq!(cells.len(), 24);
        assert!(cells.values().all(|&c| c == 10));
    }

    #[test]
    fn rollout_tokens_live_in_reasoning_subspace() {
        let spec = spec();
        let policy = PolicyParams::init(&spec);
        let tasks = make_tasks(&spec, 10, 1).unwrap();
        let mut rng = stream_rng(1, 2, 3, 4);
        for task in &tasks {
            let o = rollout(&policy, &spec, task, 1, &mut rng);
            for &t in &o.content_tokens {
                assert_eq!(spec.token_owner(t), Some(o.reasoning_language));
            }
            assert_eq!(o.content_tokens.len(), spec.trace_len);
            assert!(o.answer < spec.answers_per_task);
        }
    }

    #[test]
    fn zero_hint_removes_bonuses() {
        let spec = spec();
        let policy = PolicyParams::init(&spec);
        let task = &make_tasks(&spec, 1, 5).unwrap()[0];
        let logits = lang_factor_logits(&policy, &spec, task, 0);
        let mut expected = policy.lang_logits[task.language].clone();
        expected[spec.pivot_language] += spec.drift_bias;
        assert_eq!(logits, expected);
        let ans = answer_factor_logits(&policy, &spec, task, task.language, 0);
        assert_eq!(
            ans[0],
            policy.answer_logits[task.language][task.family][0] - spec.tier_offsets[task.tier]
        );
    }

    #[test]
    fn saturating_hints_force_language_and_answer() {
        let mut spec = spec();
        spec.hint_lang_gain = 60.0;
        spec.hint_ans_gain = 60.0;
        spec.format_init = 50.0;
        let policy = PolicyParams::init(&spec);
        let tasks = make_tasks(&spec, 5, 2).unwrap();
        for task in &tasks {
            let k = task.trace_len();
            let er = expected_reward(&policy, &spec, task, k);
            assert!(er >= 1.0 - 1e-6, "expected near-certain reward, got {er}");
            let mut rng = stream_rng(9, task.id, 0, 0);
            let o = rollout(&policy, &spec, task, k, &mut rng);
            assert_eq!(o.reasoning_language, task.language);
            assert_eq!(o.answer, task.correct_answer);
        }
    }

    #[test]
    fn uniform_two_language_expected_reward() {
        // two languages, K=4, flat logits, no drift, no hints, format logit 0
        let mut spec = spec();
        spec.drift_bias = 0.0;
        spec.tier_offsets = vec![0.0];
        for l in &mut spec.languages {
            l.competence = 0.0;
        }
        let policy = PolicyParams::init(&spec);
        let task = &make_tasks(&spec, 1, 3).unwrap()[0];
        let er = expected_reward(&policy, &spec, task, 0);
        assert!((er - 0.5 * 0.5 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn drift_bias_pulls_reasoning_to_pivot_at_init() {
        let spec = ArenaSpec::default();
        let policy = PolicyParams::init(&spec);
        let baseline = 1.0 / spec.n_languages() as f64;
        for task in make_tasks(&spec, 30, 4).unwrap() {
            if task.language == spec.pivot_language {
                continue;
            }
            let probs = softmax(&lang_factor_logits(&policy, &spec, &task, 0));
            assert!(probs[spec.pivot_language] > baseline);
        }
    }

    #[test]
    fn initial_no_hint_reward_ordered_by_competence() {
        let spec = ArenaSpec::default();
        let policy = PolicyParams::init(&spec);
        // fix tier/family/answer, vary language
        let mut by_lang = Vec::new();
        for lang in 0..spec.n_languages() {
            let mut rng = stream_rng(1, lang as u64, 0, 0);
            let task = draw_task_fields(&spec, lang as u64, lang, 1, 0, 2, &mut rng);
            by_lang.push((spec.languages[lang].competence, expected_reward(&policy, &spec, &task, 0)));
        }
        for a in 0..by_lang.len() {
            for b in 0..by_lang.len() {
                if by_lang[a].0 > by_lang[b].0 {
                    assert!(by_lang[a].1 > by_lang[b].1);
                }
            }
        }
    }

    #[test]
    fn logprob_matches_factor_recomputation() {
        let spec = spec();
        let policy = PolicyParams::init(&spec);
        let task = &make_tasks(&spec, 1, 5).unwrap()[0];
        let mut rng = stream_rng(5, 6, 7, 8);
        let o = rollout(&policy, &spec, task, 2, &mut rng);

        let mut lp = if o.well_formed {
            log_sigmoid(policy.format_logit)
        } else {
            log_sigmoid(-policy.format_logit)
        };
        lp += log_softmax(&lang_factor_logits(&policy, &spec, task, 2))[o.reasoning_language];
        let token_lp = log_softmax(&policy.token_logits[o.reasoning_language]);
        let off = spec.token_offset(o.reasoning_language);
        for &t in &o.content_tokens {
            lp += token_lp[(t - off) as usize];
        }
        let slot = slot_of_answer(&spec, task, o.answer);
        lp += log_softmax(&answer_factor_logits(&policy, &spec, task, o.reasoning_language, 2))[slot];
        assert!((lp - o.logprob_old).abs() < 1e-12);
    }

    #[test]
    fn score_outcome_components() {
        let spec = spec();
        let task = &make_tasks(&spec, 1, 9).unwrap()[0];
        let good = Outcome {
            well_formed: true,
            reasoning_language: task.language,
            content_tokens: vec![],
            answer: task.correct_answer,
            logprob_old: 0.0,
        };
        let b = score_outcome(&good, task);
        assert!(b.r_lc && b.r_format && b.r_acc && b.r);

        let drifted = Outcome { reasoning_language: (task.language + 1) % 2, ..good.clone() };
        let b = score_outcome(&drifted, task);
        assert!(!b.r_lc && b.r_format && b.r_acc && !b.r);

        let malformed = Outcome { well_formed: false, ..good };
        let b = score_outcome(&malformed, task);
        assert!(!b.r_format && !b.r);
    }

    #[test]
    fn stream_rng_is_key_sensitive() {
        let a: u64 = rand::Rng::gen(&mut stream_rng(1, 2, 3, 4));
        let b: u64 = rand::Rng::gen(&mut stream_rng(1, 2, 3, 4));
        let c: u64 = rand::Rng::gen(&mut stream_rng(1, 2, 3, 5));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn expected_reward_nondecreasing_in_k(seed in 0u64..500) {
            let spec = spec();
            let policy = PolicyParams::init(&spec);
            let task = &make_tasks(&spec, 1, seed).unwrap()[0];
            let mut prev = -1.0;
            for k in 0..=task.trace_len() {
                let er = expected_reward(&policy, &spec, task, k);
                prop_assert!(er + 1e-12 >= prev);
                prev = er;
            }
        }
    }
}
