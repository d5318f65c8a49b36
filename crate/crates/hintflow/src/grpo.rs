//! Group-relative policy optimization with a clipped surrogate objective.
//!
//! Advantages standardize rewards within each rollout group (population
//! standard deviation, zero for degenerate groups). The surrogate uses
//! sequence-level importance ratios against a frozen old-policy snapshot and
//! drops the KL term entirely. Gradients are analytic: each categorical
//! factor contributes `(one-hot - softmax)` on its logit row, scaled by
//! `rho * advantage` when the unclipped branch is active.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arena::{
    answer_factor_logits, lang_factor_logits, rollout, slot_of_answer, ArenaSpec, Outcome, Task,
    STRUCTURAL_TOKENS,
};
use crate::error::{Error, Result};
use crate::policy::{log_sigmoid, log_softmax, sigmoid, softmax, PolicyParams};

/// Degenerate-group guard for advantage standardization.
pub const STD_FLOOR: f64 = 1e-12;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainHyper {
    /// Clipping half-width of the surrogate objective.
    pub clip_eps: f64,
    /// KL coefficient; this implementation supports only 0.
    pub kl_beta: f64,
    pub lr: f64,
    /// Rollouts per prompt (G).
    pub group_size: usize,
    /// EMA smoothing for effective-update rates.
    pub alpha: f64,
    /// Switch threshold; values above 1 disable the adaptive switch.
    pub tau: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            clip_eps: 0.2,
            kl_beta: 0.0,
            lr: 0.8,
            group_size: 8,
            alpha: 0.5,
            tau: 0.4,
            seed: 17,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::config("hyper.clip_eps: must lie in (0, 1)"));
        }
        if self.kl_beta != 0.0 {
            return Err(Error::config("hyper.kl_beta: only 0 is supported"));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::config("hyper.lr: must be > 0"));
        }
        if self.group_size < 2 {
            return Err(Error::config("hyper.group_size: must be >= 2 for standardization"));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::config("hyper.alpha: must lie in [0, 1)"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::config("hyper.tau: must be finite and >= 0"));
        }
        Ok(())
    }
}

/// One prompt's sampled group: outcomes, rewards, standardized advantages.
#[derive(Debug, Clone)]
pub struct RolloutGroup {
    pub task: Task,
    /// Hint prefix length the group was sampled under.
    pub k: usize,
    pub outcomes: Vec<Outcome>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    /// Samples G outcomes for a task under the (frozen) policy and scores
    /// them. RNG streams are keyed per rollout, so scheduling cannot change
    /// the samples.
    pub fn sample(
        policy: &PolicyParams,
        spec: &ArenaSpec,
        task: &Task,
        k: usize,
        group_size: usize,
        seed: u64,
        step: u64,
    ) -> Result<Self> {
        let outcomes: Vec<Outcome> = (0..group_size as u64)
            .map(|i| {
                let mut rng = crate::arena::stream_rng(seed, step, task.id, i);
                rollout(policy, spec, task, k, &mut rng)
            })
            .collect();
        let rewards: Vec<f64> = outcomes
            .iter()
            .map(|o| crate::arena::score_outcome(o, task).r as u8 as f64)
            .collect();
        let advantages = standardize_advantages(&rewards)?;
        Ok(RolloutGroup { task: task.clone(), k, outcomes, rewards, advantages })
    }

    pub fn mean_reward(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
    }
}

/// Group-wise standardized advantages with population standard deviation.
/// Constant reward vectors give all-zero advantages.
pub fn standardize_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(Error::domain("advantage standardization needs a group of size >= 2"));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    if std < STD_FLOOR {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Factored sequence log-probability of an outcome under `policy`, hint
/// bonuses included. Errors when the outcome is structurally incompatible
/// with the arena process.
pub fn sequence_logprob(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    task: &Task,
    k: usize,
    outcome: &Outcome,
) -> Result<f64> {
    if outcome.reasoning_language >= spec.n_languages() {
        return Err(Error::domain("outcome reasoning language out of range"));
    }
    if outcome.answer >= spec.answers_per_task {
        return Err(Error::domain("outcome answer out of range"));
    }
    let mut lp = if outcome.well_formed {
        log_sigmoid(policy.format_logit)
    } else {
        log_sigmoid(-policy.format_logit)
    };

    lp += log_softmax(&lang_factor_logits(policy, spec, task, k))[outcome.reasoning_language];

    let token_lp = log_softmax(&policy.token_logits[outcome.reasoning_language]);
    let offset = spec.token_offset(outcome.reasoning_language);
    for &t in &outcome.content_tokens {
        let local = t
            .checked_sub(offset)
            .filter(|&l| (l as usize) < token_lp.len())
            .ok_or_else(|| {
                Error::domain(format!(
                    "content token {t} outside the reasoning language's subspace"
                ))
            })?;
        lp += token_lp[local as usize];
    }

    let slot = slot_of_answer(spec, task, outcome.answer);
    lp += log_softmax(&answer_factor_logits(policy, spec, task, outcome.reasoning_language, k))
        [slot];
    Ok(lp)
}

/// Mean over the group of `min(rho * A, clip(rho, 1-eps, 1+eps) * A)`.
pub fn clipped_surrogate(
    old_lp: &[f64],
    new_lp: &[f64],
    advantages: &[f64],
    eps: f64,
) -> Result<f64> {
    if old_lp.len() != new_lp.len() || old_lp.len() != advantages.len() {
        return Err(Error::domain("clipped_surrogate: length mismatch"));
    }
    if old_lp.is_empty() {
        return Err(Error::domain("clipped_surrogate: empty group"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("clipped_surrogate: eps must lie in (0, 1)"));
    }
    let mut total = 0.0;
    for ((&o, &n), &a) in old_lp.iter().zip(new_lp).zip(advantages) {
        let rho = (n - o).exp();
        let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
        total += (rho * a).min(clipped * a);
    }
    Ok(total / old_lp.len() as f64)
}

/// Analytic gradient of the clipped surrogate for one rollout group,
/// averaged over the group. Samples on the clipped branch contribute zero.
pub fn surrogate_gradient(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    group: &RolloutGroup,
    eps: f64,
) -> Result<PolicyParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("surrogate_gradient: eps must lie in (0, 1)"));
    }
    let mut grad = policy.zeros_like();
    let g = group.outcomes.len();
    for (i, outcome) in group.outcomes.iter().enumerate() {
        let a = group.advantages[i];
        if a == 0.0 {
            continue;
        }
        let new_lp = sequence_logprob(policy, spec, &group.task, group.k, outcome)?;
        let rho = (new_lp - outcome.logprob_old).exp();
        let clipped = rho.clamp(1.0 - eps, 1.0 + eps);
        if rho * a > clipped * a {
            continue; // clipped branch active: constant in theta
        }
        let weight = rho * a / g as f64;
        accumulate_logprob_grad(&mut grad, policy, spec, group, outcome, weight);
    }
    Ok(grad)
}

/// `grad += weight * d log pi(outcome) / d theta`.
fn accumulate_logprob_grad(
    grad: &mut PolicyParams,
    policy: &PolicyParams,
    spec: &ArenaSpec,
    group: &RolloutGroup,
    outcome: &Outcome,
    weight: f64,
) {
    let task = &group.task;
    let k = group.k;

    let wf = outcome.well_formed as u8 as f64;
    grad.format_logit += weight * (wf - sigmoid(policy.format_logit));

    let lang_probs = softmax(&lang_factor_logits(policy, spec, task, k));
    let lang_row = &mut grad.lang_logits[task.language];
    for (j, p) in lang_probs.iter().enumerate() {
        let onehot = (j == outcome.reasoning_language) as u8 as f64;
        lang_row[j] += weight * (onehot - p);
    }

    let token_probs = softmax(&policy.token_logits[outcome.reasoning_language]);
    let token_row = &mut grad.token_logits[outcome.reasoning_language];
    let offset = spec.token_offset(outcome.reasoning_language);
    let m = outcome.content_tokens.len() as f64;
    for (j, p) in token_probs.iter().enumerate() {
        token_row[j] -= weight * m * p;
    }
    for &t in &outcome.content_tokens {
        token_row[(t - offset) as usize] += weight;
    }

    let ans_probs =
        softmax(&answer_factor_logits(policy, spec, task, outcome.reasoning_language, k));
    let slot = slot_of_answer(spec, task, outcome.answer);
    let ans_row = &mut grad.answer_logits[outcome.reasoning_language][task.family];
    for (j, p) in ans_probs.iter().enumerate() {
        let onehot = (j == slot) as u8 as f64;
        ans_row[j] += weight * (onehot - p);
    }
}

/// Gradient-ascent step: `theta += lr * grad`. Aborts on non-finite entries.
pub fn sgd_step(policy: &mut PolicyParams, grad: &PolicyParams, lr: f64) -> Result<()> {
    if !grad.all_finite() {
        return Err(Error::Numeric("non-finite gradient entry; step aborted".into()));
    }
    policy.add_scaled(grad, lr)
}

/// Monte Carlo estimate of mean per-token entropy: sample outputs, average
/// `-log pi(y) / |y|` per output, then average over samples and prompts.
/// `|y|` counts the serialized tokens (tags + content + answer), matching the
/// number of factored decisions.
pub fn entropy_estimate(
    policy: &PolicyParams,
    spec: &ArenaSpec,
    prompts: &[(&Task, usize)],
    samples_per_prompt: usize,
    rng: &mut impl Rng,
) -> f64 {
    if prompts.is_empty() || samples_per_prompt == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for &(task, k) in prompts {
        for _ in 0..samples_per_prompt {
            let outcome = rollout(policy, spec, task, k, rng);
            total += entropy_of_outcome(&outcome);
        }
    }
    total / (prompts.len() * samples_per_prompt) as f64
}

/// Per-output normalized surprisal used by the entropy estimator.
pub fn entropy_of_outcome(outcome: &Outcome) -> f64 {
    -outcome.logprob_old / outcome.token_len() as f64
}

/// Number of decisions/tokens per arena output.
pub fn outcome_token_count(spec: &ArenaSpec) -> usize {
    spec.trace_len + STRUCTURAL_TOKENS
}
