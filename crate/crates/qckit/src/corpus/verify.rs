//! Structural pair verification, independent of the injection code path:
//! classify the difference between q_noise and q_clean directly and check
//! it against the declared error kind and position.

use serde::Serialize;
use thiserror::Error;

use super::{ErrorType, QueryPair};
use crate::textedit::{segment_as, unit_mode};

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum VerifyError {
    #[error("q_noise equals q_clean")]
    Identical,
    #[error("difference does not classify as exactly one {declared} edit")]
    WrongShape { declared: ErrorType },
    #[error("declared error_pos {declared_pos} is not a valid {kind} position (valid: {valid:?})")]
    WrongPosition { kind: ErrorType, declared_pos: usize, valid: Vec<usize> },
}

/// Classify the unit-level difference between a noisy and a clean query as
/// exactly one error of one kind, if possible. Returns the kind and every
/// position at which the single edit could have been injected (runs of
/// equal units make deletions ambiguous).
pub fn classify_pair(q_noise: &str, q_clean: &str) -> Option<(ErrorType, Vec<usize>)> {
    if q_noise == q_clean {
        return None;
    }
    let mode = unit_mode(q_clean);
    let noise = segment_as(q_noise, mode);
    let clean = segment_as(q_clean, mode);

    if noise.len() == clean.len() {
        let diffs: Vec<usize> = (0..clean.len()).filter(|&i| noise[i] != clean[i]).collect();
        match diffs.as_slice() {
            [i] => return Some((ErrorType::WrongWords, vec![*i])),
            [i, j] if *j == *i + 1 && noise[*i] == clean[*j] && noise[*j] == clean[*i] => {
                return Some((ErrorType::DisorderWords, vec![*i]));
            }
            _ => return None,
        }
    }

    if noise.len() + 1 == clean.len() {
        let valid: Vec<usize> = (0..clean.len())
            .filter(|&j| {
                noise[..j] == clean[..j] && noise[j..] == clean[j + 1..]
            })
            .collect();
        if !valid.is_empty() {
            return Some((ErrorType::MissingWords, valid));
        }
    }

    None
}

/// Check every single-error invariant of a pair: the strings differ, the
/// difference classifies as the declared kind, and the declared position is
/// one at which the inverse edit reconstructs q_clean.
pub fn verify_pair(pair: &QueryPair) -> Result<(), VerifyError> {
    if pair.q_noise == pair.q_clean {
        return Err(VerifyError::Identical);
    }
    let Some((kind, valid)) = classify_pair(&pair.q_noise, &pair.q_clean) else {
        return Err(VerifyError::WrongShape { declared: pair.error });
    };
    if kind != pair.error {
        return Err(VerifyError::WrongShape { declared: pair.error });
    }
    if !valid.contains(&pair.error_pos) {
        return Err(VerifyError::WrongPosition {
            kind,
            declared_pos: pair.error_pos,
            valid,
        });
    }
    Ok(())
}

/// Plain unit-level Levenshtein distance, written as its own two-row DP so
/// multi-error (`repeat > 1`) outputs can be sanity-checked without going
/// through the alignment module.
pub fn unit_edit_distance(a: &str, b: &str) -> usize {
    let mode = unit_mode(a);
    let xs = segment_as(a, mode);
    let ys = segment_as(b, mode);
    let mut prev: Vec<usize> = (0..=ys.len()).collect();
    let mut curr = vec![0usize; ys.len() + 1];
    for (i, x) in xs.iter().enumerate() {
        curr[0] = i + 1;
        for (j, y) in ys.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[ys.len()]
}
