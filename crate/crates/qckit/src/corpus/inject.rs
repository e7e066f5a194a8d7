//! Single-error injection into a clean query: substitute a confusable unit,
//! drop a unit, or swap two adjacent distinct units. Deterministic given
//! (query, kind, seed, table).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{ConfusionTable, ErrorType};
use crate::textedit::{UnitMode, join_units, segment, segment_as, unit_mode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InjectError {
    #[error("query has {got} unit(s); {kind} needs at least {needed}")]
    TooShort { kind: ErrorType, needed: usize, got: usize },
    #[error("no confusable unit available for {0:?} (fallback disabled or alphabet exhausted)")]
    NoConfusableUnit(String),
    #[error("all adjacent unit pairs are equal; no swap can change the query")]
    NoSwappablePair,
}

/// Shared injection inputs: the confusion table, the corpus alphabet used
/// when fallback substitution is enabled, and the fallback switch.
#[derive(Debug, Clone, Copy)]
pub struct InjectContext<'a> {
    pub table: &'a ConfusionTable,
    pub alphabet: &'a [String],
    pub fallback: bool,
}

/// One injected error, before a pair id and split are attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub q_noise: String,
    pub kind: ErrorType,
    pub error_pos: usize,
}

/// All units appearing in the corpus, each under its query's own
/// granularity, sorted for determinism. Used for fallback substitution.
pub fn corpus_alphabet<'a>(queries: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut set = std::collections::BTreeSet::new();
    for q in queries {
        for u in segment(q) {
            set.insert(u.to_string());
        }
    }
    set.into_iter().collect()
}

fn min_units(kind: ErrorType) -> usize {
    match kind {
        ErrorType::WrongWords => 1,
        ErrorType::MissingWords | ErrorType::DisorderWords => 2,
    }
}

/// Inject one error of `kind` into `q_clean`, drawing the position (and
/// replacement, for wrong-words) from a ChaCha stream seeded with `seed`.
pub fn inject_error(
    q_clean: &str,
    kind: ErrorType,
    seed: u64,
    ctx: &InjectContext<'_>,
) -> Result<Injection, InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inject_with_rng(q_clean, kind, &mut rng, ctx)
}

pub(crate) fn inject_with_rng(
    q_clean: &str,
    kind: ErrorType,
    rng: &mut ChaCha8Rng,
    ctx: &InjectContext<'_>,
) -> Result<Injection, InjectError> {
    let mode = unit_mode(q_clean);
    let units = segment_as(q_clean, mode);
    let needed = min_units(kind);
    if units.len() < needed {
        return Err(InjectError::TooShort { kind, needed, got: units.len() });
    }
    match kind {
        ErrorType::WrongWords => {
            let pos = rng.random_range(0..units.len());
            let replacement = pick_confusable(units[pos], mode, rng, ctx)?;
            let mut noisy: Vec<&str> = units.clone();
            noisy[pos] = &replacement;
            Ok(Injection { q_noise: join_units(&noisy, mode), kind, error_pos: pos })
        }
        ErrorType::MissingWords => {
            let pos = rng.random_range(0..units.len());
            let mut noisy = units.clone();
            noisy.remove(pos);
            Ok(Injection { q_noise: join_units(&noisy, mode), kind, error_pos: pos })
        }
        ErrorType::DisorderWords => {
            // Swapping equal neighbours would leave the query unchanged.
            let swappable: Vec<usize> =
                (0..units.len() - 1).filter(|&i| units[i] != units[i + 1]).collect();
            if swappable.is_empty() {
                return Err(InjectError::NoSwappablePair);
            }
            let pos = swappable[rng.random_range(0..swappable.len())];
            let mut noisy = units.clone();
            noisy.swap(pos, pos + 1);
            Ok(Injection { q_noise: join_units(&noisy, mode), kind, error_pos: pos })
        }
    }
}

/// A substitute for `unit`: uniform over the confusion-table entries that
/// are distinct, single-unit replacements; falling back (when enabled) to a
/// uniform draw from the rest of the corpus alphabet.
fn pick_confusable(
    unit: &str,
    mode: UnitMode,
    rng: &mut ChaCha8Rng,
    ctx: &InjectContext<'_>,
) -> Result<String, InjectError> {
    let usable = |c: &String| c != unit && segment_as(c, mode).len() == 1;
    if let Some(cands) = ctx.table.candidates(unit) {
        let cands: Vec<&String> = cands.iter().filter(|c| usable(c)).collect();
        if !cands.is_empty() {
            return Ok(cands[rng.random_range(0..cands.len())].clone());
        }
    }
    if ctx.fallback {
        let cands: Vec<&String> = ctx.alphabet.iter().filter(|c| usable(c)).collect();
        if !cands.is_empty() {
            return Ok(cands[rng.random_range(0..cands.len())].clone());
        }
    }
    Err(InjectError::NoConfusableUnit(unit.to_string()))
}
