//! Edit-overlap F0.5 and exact-match accuracy.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{EditSet, extract_edits};

/// NFC-normalize and trim outer whitespace: the comparison form shared by
/// the accuracy metric, the consistency reward, and the identity-zero rule
/// of the accuracy reward.
pub fn normalize(s: &str) -> String {
    s.trim().nfc().collect()
}

/// Exact match after normalization: 1 iff `hypothesis` equals `q_clean`.
pub fn accuracy(hypothesis: &str, q_clean: &str) -> bool {
    normalize(hypothesis) == normalize(q_clean)
}

/// Precision-weighted F0.5 over correction edits.
///
/// Hypothesis and gold are both reduced to edit sets relative to `q_noise`;
/// a true positive is an exact (start, end, replacement) match. Inputs are
/// normalized first so whitespace padding and NFC variants of an identical
/// correction score 1.
pub fn f_half_score(hypothesis: &str, q_noise: &str, q_clean: &str) -> f64 {
    let noise = normalize(q_noise);
    let hyp = extract_edits(&noise, &normalize(hypothesis));
    let gold = extract_edits(&noise, &normalize(q_clean));
    f_half_of_edit_sets(&hyp, &gold)
}

/// F0.5 between two edit sets over the same source.
///
/// Conventions: both empty → 1 (correctly proposing no change); exactly one
/// empty → 0; no true positives → 0.
pub fn f_half_of_edit_sets(hyp: &EditSet, gold: &EditSet) -> f64 {
    match (hyp.edits.is_empty(), gold.edits.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        (false, false) => {}
    }
    let tp = hyp.edits.iter().filter(|e| gold.edits.contains(e)).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / hyp.edits.len() as f64;
    let r = tp / gold.edits.len() as f64;
    1.25 * p * r / (0.25 * p + r)
}

/// The (F0.5, exact-match) pair reported per evaluation sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePair {
    pub f_half: f64,
    pub acc: bool,
}

pub fn score_pair(hypothesis: &str, q_noise: &str, q_clean: &str) -> ScorePair {
    ScorePair {
        f_half: f_half_score(hypothesis, q_noise, q_clean),
        acc: accuracy(hypothesis, q_clean),
    }
}
