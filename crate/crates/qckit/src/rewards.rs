//! The reward suite for sandwich-format trajectories: edit-based accuracy,
//! strict-format indicator, initial/final consistency, their unified
//! product, and the weighted total.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::QueryPair;
use crate::format::{OutputFormat, ParseOutcome, ParseResult, SandwichOutput, parse};
use crate::textedit::{f_half_score, normalize};

/// Weights of the total reward: `w_acc` on the accuracy term and `w_fc` on
/// the unified format×consistency term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_acc: f64,
    pub w_fc: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { w_acc: 1.0, w_fc: 1.0 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewardError {
    #[error("reward weights must be non-negative and not both zero")]
    InvalidWeights,
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let ok = self.w_acc >= 0.0 && self.w_fc >= 0.0 && (self.w_acc > 0.0 || self.w_fc > 0.0);
        if ok { Ok(()) } else { Err(RewardError::InvalidWeights) }
    }
}

/// Per-trajectory reward decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// 0 when no initial answer is extractable or it equals the noisy input;
    /// otherwise the edit-overlap F0.5 of the initial answer.
    pub r_acc: f64,
    /// 1 iff the text parses strictly as a sandwich.
    pub r_fmt: u8,
    /// 1 iff the parse is strict and the initial and final corrections match
    /// after normalization; 0 whenever the parse is not strict.
    pub r_cons: u8,
    /// `r_fmt · r_cons`.
    pub r_unified: u8,
    /// `w_acc · r_acc + w_fc · r_unified`.
    pub r_total: f64,
}

/// Accuracy reward on the first extractable answer: zero for missing
/// answers and for identity outputs, the F0.5 of the proposed edits
/// otherwise.
pub fn accuracy_reward(parsed: &ParseResult, pair: &QueryPair) -> f64 {
    accuracy_reward_on(parsed, &pair.q_noise, &pair.q_clean)
}

pub fn accuracy_reward_on(parsed: &ParseResult, q_noise: &str, q_clean: &str) -> f64 {
    let Some(c_init) = parsed.first_answer() else {
        return 0.0;
    };
    if normalize(c_init) == normalize(q_noise) {
        return 0.0;
    }
    f_half_score(c_init, q_noise, q_clean)
}

/// Strict-structure indicator for the sandwich grammar.
pub fn format_reward(parsed: &ParseResult) -> u8 {
    parsed.sandwich().is_some() as u8
}

/// Indicator that the initial and final corrections agree.
pub fn consistency_reward(out: &SandwichOutput) -> u8 {
    (normalize(&out.c_init) == normalize(&out.c_final)) as u8
}

/// Score raw model text against a pair under the given weights.
pub fn total_reward(text: &str, pair: &QueryPair, w: &RewardWeights) -> RewardBreakdown {
    total_reward_on(text, &pair.q_noise, &pair.q_clean, w)
}

/// Same as [`total_reward`] without requiring a full [`QueryPair`]; the
/// reward only reads the noisy input and the gold correction.
pub fn total_reward_on(text: &str, q_noise: &str, q_clean: &str, w: &RewardWeights) -> RewardBreakdown {
    let parsed = parse(text, OutputFormat::Sandwich);
    let r_fmt = format_reward(&parsed);
    let r_cons = match &parsed.outcome {
        ParseOutcome::StrictOk(_) => parsed.sandwich().map_or(0, consistency_reward),
        _ => 0,
    };
    let r_acc = accuracy_reward_on(&parsed, q_noise, q_clean);
    let r_unified = r_fmt * r_cons;
    RewardBreakdown {
        r_acc,
        r_fmt,
        r_cons,
        r_unified,
        r_total: w.w_acc * r_acc + w.w_fc * f64::from(r_unified),
    }
}
