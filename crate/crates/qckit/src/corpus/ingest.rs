//! Clean-corpus ingestion from TSV (`id<TAB>query`) or JSONL
//! (`{"id": ..., "query": ...}`).

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv,
    Jsonl,
}

impl CorpusFormat {
    /// Guess from the file extension; TSV when unknown.
    pub fn infer(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => CorpusFormat::Jsonl,
            _ => CorpusFormat::Tsv,
        }
    }
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format {other:?} (expected tsv or jsonl)")),
        }
    }
}

/// A rejected input row and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Result of an ingestion pass: accepted (id, query) entries in file order,
/// per-row rejections, and the count of duplicate queries dropped.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub entries: Vec<(String, String)>,
    pub diagnostics: Vec<RowDiagnostic>,
    pub duplicates: usize,
}

/// Trim and collapse internal ASCII whitespace runs to single spaces, so
/// token-mode queries are in canonical single-space form.
pub(crate) fn canonicalize_query(raw: &str) -> String {
    if raw.bytes().any(|b| b.is_ascii_whitespace()) {
        raw.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        raw.to_string()
    }
}

/// Ingest a clean-query corpus. Malformed rows are rejected per-row with
/// diagnostics; duplicate queries keep their first occurrence; a file with
/// no valid rows is an error.
pub fn ingest_clean(path: &Path, format: CorpusFormat) -> Result<IngestReport, CorpusError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut report = IngestReport::default();
    let mut seen = std::collections::HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = match format {
            CorpusFormat::Tsv => parse_tsv_row(&line),
            CorpusFormat::Jsonl => parse_jsonl_row(&line),
        };
        match row {
            Ok((id, query)) => {
                let query = canonicalize_query(&query);
                if query.is_empty() {
                    report.diagnostics.push(RowDiagnostic { line: lineno, reason: "empty query".into() });
                } else if !seen.insert(query.clone()) {
                    report.duplicates += 1;
                } else {
                    report.entries.push((id, query));
                }
            }
            Err(reason) => report.diagnostics.push(RowDiagnostic { line: lineno, reason }),
        }
    }

    if report.entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(report)
}

fn parse_tsv_row(line: &str) -> Result<(String, String), String> {
    let (id, query) = line.split_once('\t').ok_or("missing tab separator")?;
    let id = id.trim();
    if id.is_empty() {
        return Err("empty id".into());
    }
    Ok((id.to_string(), query.to_string()))
}

#[derive(Deserialize)]
struct JsonRow {
    id: serde_json::Value,
    query: String,
}

fn parse_jsonl_row(line: &str) -> Result<(String, String), String> {
    let row: JsonRow = serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let id = match row.id {
        serde_json::Value::String(s) if !s.trim().is_empty() => s,
        serde_json::Value::Number(n) => n.to_string(),
        _ => return Err("id must be a non-empty string or a number".into()),
    };
    Ok((id, row.query))
}
