//! Token-budget evaluation: run a backend over a test split under full and
//! limited completion budgets, score each sample, and aggregate
//! budget-comparison and per-error-type reports.

mod report;

pub use report::{DeltaRow, ErrorTypeRow, EvalReport, FormatBudgetRow};

use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorType, QueryPair};
use crate::format::{OutputFormat, ParseOutcome, PromptTemplates, parse};
use crate::modelio::{Backend, GenerationRequest, generate_batch};
use crate::textedit::{accuracy, f_half_score};

/// Full and limited completion budgets, in tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSpec {
    pub full_tokens: u32,
    pub limited_tokens: u32,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        BudgetSpec { full_tokens: 256, limited_tokens: 20 }
    }
}

impl BudgetSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.limited_tokens < 1 || self.limited_tokens >= self.full_tokens {
            return Err(format!(
                "need 1 <= limited_tokens < full_tokens, got {} and {}",
                self.limited_tokens, self.full_tokens
            ));
        }
        Ok(())
    }

    pub fn tokens(&self, budget: BudgetKind) -> u32 {
        match budget {
            BudgetKind::Full => self.full_tokens,
            BudgetKind::Limited => self.limited_tokens,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Full,
    Limited,
}

impl BudgetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BudgetKind::Full => "full",
            BudgetKind::Limited => "limited",
        }
    }
}

impl std::fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the scored hypothesis was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordOutcome {
    StrictOk,
    PartialAnswer,
    NoAnswer,
    BackendError,
}

/// One scored evaluation sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub pair_id: String,
    pub error_type: ErrorType,
    pub format: OutputFormat,
    pub budget: BudgetKind,
    pub budget_tokens: u32,
    pub outcome: RecordOutcome,
    /// True when no answer was extractable and the raw query passed
    /// through uncorrected.
    pub fell_back: bool,
    pub hypothesis: String,
    pub f_half: f64,
    pub acc: u8,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to_first_answer_s: Option<f64>,
    pub completion_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_error: Option<String>,
}

/// Extract the hypothesis for one generation under a format's deployment
/// rule: reasoning-first output only counts with a strict parse; the
/// answer-first formats surface the earliest complete answer. Anything else
/// falls back to the noisy input (no correction).
fn extract_hypothesis(text: &str, fmt: OutputFormat, q_noise: &str) -> (RecordOutcome, bool, String) {
    let parsed = parse(text, fmt);
    let outcome = match &parsed.outcome {
        ParseOutcome::StrictOk(_) => RecordOutcome::StrictOk,
        ParseOutcome::PartialAnswer(_) => RecordOutcome::PartialAnswer,
        ParseOutcome::NoAnswer => RecordOutcome::NoAnswer,
    };
    let answer = match fmt {
        OutputFormat::ReaAns => match &parsed.outcome {
            ParseOutcome::StrictOk(fields) => Some(fields.initial_answer().to_string()),
            _ => None,
        },
        OutputFormat::AnsRea | OutputFormat::Sandwich => {
            parsed.first_answer().map(str::to_string)
        }
    };
    match answer {
        Some(a) => (outcome, false, a),
        None => (outcome, true, q_noise.to_string()),
    }
}

/// Evaluate every pair under one format and budget. Per-sample backend
/// failures are recorded (as fallback records), not fatal.
pub fn evaluate(
    pairs: &[QueryPair],
    backend: &dyn Backend,
    fmt: OutputFormat,
    spec: &BudgetSpec,
    budget: BudgetKind,
    parallelism: usize,
    templates: &PromptTemplates,
) -> Vec<SampleRecord> {
    let budget_tokens = spec.tokens(budget);
    let requests: Vec<GenerationRequest> = pairs
        .iter()
        .map(|p| GenerationRequest {
            prompt: templates.render(&p.q_noise, fmt),
            max_tokens: budget_tokens,
            temperature: 0.0,
            n: 1,
            seed: None,
        })
        .collect();
    let results = generate_batch(backend, &requests, parallelism, false);

    pairs
        .iter()
        .zip(results)
        .map(|(pair, result)| match result {
            Some(Ok(res)) => {
                let text = res.texts.first().map(String::as_str).unwrap_or("");
                let (outcome, fell_back, hypothesis) = extract_hypothesis(text, fmt, &pair.q_noise);
                SampleRecord {
                    pair_id: pair.id.clone(),
                    error_type: pair.error,
                    format: fmt,
                    budget,
                    budget_tokens,
                    outcome,
                    fell_back,
                    f_half: f_half_score(&hypothesis, &pair.q_noise, &pair.q_clean),
                    acc: accuracy(&hypothesis, &pair.q_clean) as u8,
                    hypothesis,
                    wall_time_s: res.wall_time_s,
                    time_to_first_answer_s: res.time_to_first_answer_s,
                    completion_tokens: res.completion_tokens.first().copied().unwrap_or(0),
                    backend_error: None,
                }
            }
            other => {
                let error = match other {
                    Some(Err(e)) => e.to_string(),
                    _ => "request not executed".to_string(),
                };
                SampleRecord {
                    pair_id: pair.id.clone(),
                    error_type: pair.error,
                    format: fmt,
                    budget,
                    budget_tokens,
                    outcome: RecordOutcome::BackendError,
                    fell_back: true,
                    hypothesis: pair.q_noise.clone(),
                    f_half: 0.0,
                    acc: 0,
                    wall_time_s: 0.0,
                    time_to_first_answer_s: None,
                    completion_tokens: 0,
                    backend_error: Some(error),
                }
            }
        })
        .collect()
}

/// Evaluate under both budgets, concatenating the records.
pub fn evaluate_both(
    pairs: &[QueryPair],
    backend: &dyn Backend,
    fmt: OutputFormat,
    spec: &BudgetSpec,
    parallelism: usize,
    templates: &PromptTemplates,
) -> Vec<SampleRecord> {
    let mut records = evaluate(pairs, backend, fmt, spec, BudgetKind::Full, parallelism, templates);
    records.extend(evaluate(pairs, backend, fmt, spec, BudgetKind::Limited, parallelism, templates));
    records
}

pub fn write_records_jsonl<W: std::io::Write>(
    mut out: W,
    records: &[SampleRecord],
) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records_jsonl<R: std::io::BufRead>(reader: R) -> Result<Vec<SampleRecord>, String> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(records)
}
