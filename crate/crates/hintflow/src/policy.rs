//! Factored categorical policy over arena outcomes.
//!
//! Four factors: a Bernoulli format decision, a reasoning-language choice
//! conditioned on the input language, i.i.d. content tokens within the chosen
//! language's vocabulary subspace, and an answer-slot choice conditioned on
//! (reasoning language, task family). Slot 0 is the correct answer; the arena
//! rotates slots onto concrete answer indices per task.

use serde::{Deserialize, Serialize};

use crate::arena::ArenaSpec;
use crate::error::{Error, Result};

/// Learnable logit tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Propensity to emit well-formed tag structure (Bernoulli logit).
    pub format_logit: f64,
    /// [input language][reasoning language]
    pub lang_logits: Vec<Vec<f64>>,
    /// [reasoning language][token in that language's subspace]
    pub token_logits: Vec<Vec<f64>>,
    /// [reasoning language][task family][answer slot]; slot 0 = correct.
    pub answer_logits: Vec<Vec<Vec<f64>>>,
}

impl PolicyParams {
    /// Initial policy for an arena: competence offsets seed the correct-answer
    /// slots, everything else starts flat.
    pub fn init(spec: &ArenaSpec) -> Self {
        let n = spec.languages.len();
        let lang_logits = vec![vec![0.0; n]; n];
        let token_logits = spec.languages.iter().map(|l| vec![0.0; l.vocab_size]).collect();
        let answer_logits = spec
            .languages
            .iter()
            .map(|l| {
                (0..spec.families)
                    .map(|_| {
                        let mut row = vec![0.0; spec.answers_per_task];
                        row[0] = l.competence;
                        row
                    })
                    .collect()
            })
            .collect();
        PolicyParams {
            format_logit: spec.format_init,
            lang_logits,
            token_logits,
            answer_logits,
        }
    }

    /// Same shapes, all entries zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        PolicyParams {
            format_logit: 0.0,
            lang_logits: self.lang_logits.iter().map(|r| vec![0.0; r.len()]).collect(),
            token_logits: self.token_logits.iter().map(|r| vec![0.0; r.len()]).collect(),
            answer_logits: self
                .answer_logits
                .iter()
                .map(|f| f.iter().map(|r| vec![0.0; r.len()]).collect())
                .collect(),
        }
    }

    /// `self += scale * other`, shapes must match.
    pub fn add_scaled(&mut self, other: &PolicyParams, scale: f64) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::domain("policy shape mismatch in add_scaled"));
        }
        self.format_logit += scale * other.format_logit;
        for (a, b) in self.lang_logits.iter_mut().zip(&other.lang_logits) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.token_logits.iter_mut().zip(&other.token_logits) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.answer_logits.iter_mut().zip(&other.answer_logits) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += scale * y;
                }
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.format_logit *= factor;
        for row in &mut self.lang_logits {
            for x in row {
                *x *= factor;
            }
        }
        for row in &mut self.token_logits {
            for x in row {
                *x *= factor;
            }
        }
        for fam in &mut self.answer_logits {
            for row in fam {
                for x in row {
                    *x *= factor;
                }
            }
        }
    }

    pub fn same_shape(&self, other: &PolicyParams) -> bool {
        self.lang_logits.len() == other.lang_logits.len()
            && self
                .lang_logits
                .iter()
                .zip(&other.lang_logits)
                .all(|(a, b)| a.len() == b.len())
            && self.token_logits.len() == other.token_logits.len()
            && self
                .token_logits
                .iter()
                .zip(&other.token_logits)
                .all(|(a, b)| a.len() == b.len())
            && self.answer_logits.len() == other.answer_logits.len()
            && self.answer_logits.iter().zip(&other.answer_logits).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(ra, rb)| ra.len() == rb.len())
            })
    }

    pub fn all_finite(&self) -> bool {
        self.format_logit.is_finite()
            && self.lang_logits.iter().flatten().all(|x| x.is_finite())
            && self.token_logits.iter().flatten().all(|x| x.is_finite())
            && self
                .answer_logits
                .iter()
                .flat_map(|f| f.iter().flatten())
                .all(|x| x.is_finite())
    }

    /// Flat view of every parameter, paired with a setter by flat index.
    /// Used by finite-difference checks and the checkpoint writer.
    pub fn param_count(&self) -> usize {
        1 + self.lang_logits.iter().map(Vec::len).sum::<usize>()
            + self.token_logits.iter().map(Vec::len).sum::<usize>()
            + self
                .answer_logits
                .iter()
                .map(|f| f.iter().map(Vec::len).sum::<usize>())
                .sum::<usize>()
    }

    pub fn get_flat(&self, idx: usize) -> f64 {
        let mut i = idx;
        if i == 0 {
            return self.format_logit;
        }
        i -= 1;
        for row in &self.lang_logits {
            if i < row.len() {
                return row[i];
            }
            i -= row.len();
        }
        for row in &self.token_logits {
            if i < row.len() {
                return row[i];
            }
            i -= row.len();
        }
        for fam in &self.answer_logits {
            for row in fam {
                if i < row.len() {
                    return row[i];
                }
                i -= row.len();
            }
        }
        panic!("flat index {idx} out of range");
    }

    pub fn set_flat(&mut self, idx: usize, value: f64) {
        let mut i = idx;
        if i == 0 {
            self.format_logit = value;
            return;
        }
        i -= 1;
        for row in &mut self.lang_logits {
            if i < row.len() {
                row[i] = value;
                return;
            }
            i -= row.len();
        }
        for row in &mut self.token_logits {
            if i < row.len() {
                row[i] = value;
                return;
            }
            i -= row.len();
        }
        for fam in &mut self.answer_logits {
            for row in fam {
                if i < row.len() {
                    row[i] = value;
                    return;
                }
                i -= row.len();
            }
        }
        panic!("flat index {idx} out of range");
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|x| x - log_sum).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(sigmoid(x)) without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    #[test]
    fn log_softmax_matches_softmax() {
        let logits = [0.3, -1.2, 2.0, 0.0];
        let lp = log_softmax(&logits);
        let p = softmax(&logits);
        for (l, q) in lp.iter().zip(&p) {
            assert!((l.exp() - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_identities() {
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!((log_sigmoid(3.0) - sigmoid(3.0).ln()).abs() < 1e-12);
        assert!((log_sigmoid(-30.0) - (-30.0)).abs() < 1e-9);
    }

    #[test]
    fn flat_indexing_round_trips() {
        let spec = ArenaSpec::small_test_spec();
        let mut p = PolicyParams::init(&spec);
        let n = p.param_count();
        for i in 0..n {
            let v = p.get_flat(i);
            p.set_flat(i, v + 1.0);
            assert_eq!(p.get_flat(i), v + 1.0);
            p.set_flat(i, v);
        }
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(shift in -10.0f64..10.0) {
            let a = softmax(&[0.1, 0.5, -0.3]);
            let b = softmax(&[0.1 + shift, 0.5 + shift, -0.3 + shift]);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
