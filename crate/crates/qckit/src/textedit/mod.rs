//! Unit-level edit extraction between strings, plus the edit-overlap F0.5
//! and exact-match metrics built on it.
//!
//! A *unit* is the atomic editable piece of a query: a single extended
//! grapheme cluster for whitespace-free text (CJK-style queries), or a
//! whitespace-delimited token otherwise. Corpus construction, scoring, and
//! reward code all share this definition.

mod align;
mod score;

pub use score::{ScorePair, accuracy, f_half_of_edit_sets, f_half_score, normalize, score_pair};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

/// Granularity used to split a string into units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    /// One unit per extended grapheme cluster.
    Grapheme,
    /// One unit per whitespace-delimited token.
    Token,
}

/// Natural mode for `text`: token-level when it contains ASCII whitespace,
/// grapheme-level otherwise.
pub fn unit_mode(text: &str) -> UnitMode {
    if text.bytes().any(|b| b.is_ascii_whitespace()) {
        UnitMode::Token
    } else {
        UnitMode::Grapheme
    }
}

/// Split `text` into units under its natural mode.
pub fn segment(text: &str) -> Vec<&str> {
    segment_as(text, unit_mode(text))
}

/// Split `text` into units under an explicit mode. Total for any input; a
/// whitespace-free string in token mode is a single token.
pub fn segment_as(text: &str, mode: UnitMode) -> Vec<&str> {
    match mode {
        UnitMode::Token => text.split_whitespace().collect(),
        UnitMode::Grapheme => {
            if text.is_ascii() && !text.bytes().any(|b| b.is_ascii_whitespace()) {
                // Whitespace-free ASCII has one cluster per byte (CRLF is the
                // only multi-byte ASCII cluster and cannot occur here).
                (0..text.len()).map(|i| &text[i..i + 1]).collect()
            } else {
                text.graphemes(true).collect()
            }
        }
    }
}

pub(crate) fn join_units(units: &[&str], mode: UnitMode) -> String {
    match mode {
        UnitMode::Grapheme => units.concat(),
        UnitMode::Token => units.join(" "),
    }
}

/// One span replacement over source units. `start == end` is a pure
/// insertion before unit `start`; an empty replacement is a pure deletion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    pub replacement: Vec<String>,
}

/// Non-overlapping span edits over one source string, sorted by start.
/// Between two consecutive edits at least one source unit is kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditSet {
    pub source: String,
    pub edits: Vec<Edit>,
}

impl EditSet {
    pub fn is_identity(&self) -> bool {
        self.edits.is_empty()
    }

    /// Apply the edits to the source. Token-mode output is joined with
    /// single spaces, so non-canonical whitespace is normalized.
    pub fn apply(&self) -> String {
        let mode = unit_mode(&self.source);
        let units = segment_as(&self.source, mode);
        let mut out: Vec<&str> = Vec::with_capacity(units.len() + 4);
        let mut cursor = 0usize;
        for e in &self.edits {
            out.extend_from_slice(&units[cursor..e.start]);
            out.extend(e.replacement.iter().map(|s| s.as_str()));
            cursor = e.end;
        }
        out.extend_from_slice(&units[cursor..]);
        join_units(&out, mode)
    }
}

/// Minimal-cost unit alignment between `source` and `target`, merged into
/// maximal span edits.
///
/// Deterministic tie-breaking: substitutions are preferred over
/// insert+delete pairs, then the leftmost edit, then deletion before
/// insertion. Applying the result to `source` yields `target` (token-mode
/// targets are reproduced in single-space canonical form).
pub fn extract_edits(source: &str, target: &str) -> EditSet {
    let mode = unit_mode(source);
    let src = segment_as(source, mode);
    let tgt = segment_as(target, mode);
    EditSet {
        source: source.to_string(),
        edits: align::span_edits(&src, &tgt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edit(start: usize, end: usize, repl: &[&str]) -> Edit {
        Edit {
            start,
            end,
            replacement: repl.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn mode_selection() {
        assert_eq!(unit_mode("abc"), UnitMode::Grapheme);
        assert_eq!(unit_mode("北京大学"), UnitMode::Grapheme);
        assert_eq!(unit_mode("two words"), UnitMode::Token);
        assert_eq!(unit_mode("tab\there"), UnitMode::Token);
    }

    #[test]
    fn segment_graphemes_and_tokens() {
        assert_eq!(segment("abc"), vec!["a", "b", "c"]);
        assert_eq!(segment("北京大学"), vec!["北", "京", "大", "学"]);
        assert_eq!(segment("red wine glass"), vec!["red", "wine", "glass"]);
        // Combining mark stays attached to its base.
        assert_eq!(segment("e\u{301}x"), vec!["e\u{301}", "x"]);
    }

    #[test]
    fn identity_has_no_edits() {
        assert!(extract_edits("abc", "abc").edits.is_empty());
        assert!(extract_edits("", "").edits.is_empty());
    }

    #[test]
    fn single_substitution() {
        let es = extract_edits("abXd", "abcd");
        assert_eq!(es.edits, vec![edit(2, 3, &["c"])]);
    }

    #[test]
    fn single_insertion() {
        let es = extract_edits("abd", "abcd");
        assert_eq!(es.edits, vec![edit(2, 2, &["c"])]);
    }

    #[test]
    fn single_deletion() {
        let es = extract_edits("abcd", "abd");
        assert_eq!(es.edits, vec![edit(2, 3, &[])]);
    }

    #[test]
    fn leftmost_tie_breaks() {
        // Deleting either "a" of "aa" costs the same; the leftmost wins.
        assert_eq!(extract_edits("aa", "a").edits, vec![edit(0, 1, &[])]);
        // Same for the insertion point.
        assert_eq!(extract_edits("aa", "aaa").edits, vec![edit(0, 0, &["a"])]);
    }

    #[test]
    fn substitution_preferred_over_indel_pair() {
        // "ab" -> "ba" admits del+ins at cost 2 as well; two substitutions
        // carry fewer indels and win, merging into one span edit.
        assert_eq!(extract_edits("ab", "ba").edits, vec![edit(0, 2, &["b", "a"])]);
    }

    #[test]
    fn deletion_before_insertion_merges() {
        // "ax" -> "b": canonical ops are delete "a" then substitute "x"->"b",
        // merged into a single span.
        assert_eq!(extract_edits("ax", "b").edits, vec![edit(0, 2, &["b"])]);
    }

    #[test]
    fn token_mode_alignment() {
        let es = extract_edits("red wein glass", "red wine glass");
        assert_eq!(es.edits, vec![edit(1, 2, &["wine"])]);
        assert_eq!(es.apply(), "red wine glass");
    }

    #[test]
    fn apply_round_trips() {
        for (s, t) in [
            ("abcd", "axyd"),
            ("abcd", ""),
            ("", "abcd"),
            ("北京大学", "北京学"),
            ("one two three", "one three four"),
        ] {
            assert_eq!(extract_edits(s, t).apply(), t, "{s:?} -> {t:?}");
        }
    }

    #[test]
    fn edits_are_sorted_and_separated() {
        let es = extract_edits("aXcYe", "abcde");
        assert_eq!(es.edits, vec![edit(1, 2, &["b"]), edit(3, 4, &["d"])]);
    }
}
