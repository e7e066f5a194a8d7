//! Noisy-query corpus construction: ingest clean queries, inject exactly
//! one unit-level error per query, and emit reproducible train/dev/test
//! splits.

mod dataset;
mod ingest;
mod inject;
pub mod verify;

pub use dataset::{BuiltDataset, DatasetOptions, MixSpec, SkipStats, build_dataset};
pub use ingest::{CorpusFormat, IngestReport, RowDiagnostic, ingest_clean};
pub use inject::{InjectContext, InjectError, Injection, corpus_alphabet, inject_error};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three injected error kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    /// A unit replaced by a confusable unit.
    WrongWords,
    /// A unit dropped.
    MissingWords,
    /// Two adjacent (distinct) units swapped.
    DisorderWords,
}

impl ErrorType {
    pub const ALL: [ErrorType; 3] = [ErrorType::WrongWords, ErrorType::MissingWords, ErrorType::DisorderWords];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::WrongWords => "wrong_words",
            ErrorType::MissingWords => "missing_words",
            ErrorType::DisorderWords => "disorder_words",
        }
    }
}

impl std::fmt::Display for ErrorType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dataset split a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (noisy, clean) sample. Field names and order are the JSONL contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPair {
    pub id: String,
    pub q_noise: String,
    pub q_clean: String,
    #[serde(rename = "error_type")]
    pub error: ErrorType,
    pub error_pos: usize,
    pub split: Split,
}

/// Unit → confusable units (visually or phonetically similar). Loaded from
/// a JSON object mapping a unit to an array of units.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionTable {
    map: BTreeMap<String, Vec<String>>,
}

impl ConfusionTable {
    pub fn new(map: BTreeMap<String, Vec<String>>) -> Result<Self, CorpusError> {
        let table = ConfusionTable { map };
        table.validate()?;
        Ok(table)
    }

    pub fn empty() -> Self {
        ConfusionTable::default()
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path)?;
        let table: ConfusionTable = serde_json::from_str(&text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        for (unit, confusables) in &self.map {
            let bad = |s: &str| s.is_empty() || s.bytes().any(|b| b.is_ascii_whitespace());
            if bad(unit) || confusables.iter().any(|c| bad(c)) {
                return Err(CorpusError::InvalidConfusionTable(format!(
                    "unit {unit:?}: entries must be non-empty and whitespace-free"
                )));
            }
            if !confusables.iter().any(|c| c != unit) {
                return Err(CorpusError::InvalidConfusionTable(format!(
                    "unit {unit:?} has no confusable other than itself"
                )));
            }
        }
        Ok(())
    }

    pub fn candidates(&self, unit: &str) -> Option<&[String]> {
        self.map.get(unit).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("corpus is empty (no valid rows)")]
    EmptyCorpus,
    #[error("error-type proportions must be non-negative and sum to 1, got {0:?}")]
    InvalidMix(String),
    #[error("invalid confusion table: {0}")]
    InvalidConfusionTable(String),
    #[error("split sizes (dev {dev} + test {test}) exceed the {pairs} generated pairs")]
    SplitTooLarge { dev: usize, test: usize, pairs: usize },
    #[error("repeat count must be at least 1")]
    InvalidRepeat,
}

/// Write pairs as JSONL, one object per line, in the given order.
pub fn write_pairs_jsonl<W: Write>(mut out: W, pairs: &[QueryPair]) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Read pairs from JSONL; blank lines are skipped.
pub fn read_pairs_jsonl<R: BufRead>(reader: R) -> Result<Vec<QueryPair>, CorpusError> {
    let mut pairs = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(serde_json::from_str(&line)?);
    }
    Ok(pairs)
}

pub fn read_pairs_file(path: &Path) -> Result<Vec<QueryPair>, CorpusError> {
    let file = std::fs::File::open(path)?;
    read_pairs_jsonl(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_jsonl_field_names() {
        let pair = QueryPair {
            id: "7".into(),
            q_noise: "aXc".into(),
            q_clean: "abc".into(),
            error: ErrorType::WrongWords,
            error_pos: 1,
            split: Split::Train,
        };
        let line = serde_json::to_string(&pair).unwrap();
        assert_eq!(
            line,
            r#"{"id":"7","q_noise":"aXc","q_clean":"abc","error_type":"wrong_words","error_pos":1,"split":"train"}"#
        );
        let back: QueryPair = serde_json::from_str(&line).unwrap();
        assert_eq!(back, pair);
    }

    #[test]
    fn confusion_table_rejects_self_only_and_whitespace() {
        let json = r#"{"b": ["b"]}"#;
        let table: ConfusionTable = serde_json::from_str(json).unwrap();
        assert!(table.validate().is_err());

        let json = r#"{"b": ["x y"]}"#;
        let table: ConfusionTable = serde_json::from_str(json).unwrap();
        assert!(table.validate().is_err());

        let json = r#"{"b": ["x", "b"]}"#;
        let table: ConfusionTable = serde_json::from_str(json).unwrap();
        assert!(table.validate().is_ok());
    }
}
