//! Aggregation of sample records into budget-comparison and per-error-type
//! tables, rendered as markdown, CSV, and JSON.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::ErrorType;
use crate::format::OutputFormat;

use super::{BudgetKind, SampleRecord};

/// Mean scores for one (format, budget) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatBudgetRow {
    pub format: OutputFormat,
    pub budget: BudgetKind,
    pub n: usize,
    pub f_half_mean: f64,
    pub acc_mean: f64,
    pub time_mean_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ttfa_mean_s: Option<f64>,
}

/// Change from full to limited budget, per format:
/// (limited − full) / full × 100. Absent when the full-budget mean is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub format: OutputFormat,
    pub acc_delta_pct: Option<f64>,
    pub time_delta_pct: Option<f64>,
}

/// Mean accuracy for one (format, budget, error type) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTypeRow {
    pub format: OutputFormat,
    pub budget: BudgetKind,
    pub error_type: ErrorType,
    pub n: usize,
    pub acc_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<FormatBudgetRow>,
    pub deltas: Vec<DeltaRow>,
    pub error_type_rows: Vec<ErrorTypeRow>,
    pub warnings: Vec<String>,
}

fn format_order(fmt: OutputFormat) -> usize {
    match fmt {
        OutputFormat::ReaAns => 0,
        OutputFormat::AnsRea => 1,
        OutputFormat::Sandwich => 2,
    }
}

fn budget_order(b: BudgetKind) -> usize {
    match b {
        BudgetKind::Full => 0,
        BudgetKind::Limited => 1,
    }
}

fn error_order(e: ErrorType) -> usize {
    match e {
        ErrorType::WrongWords => 0,
        ErrorType::MissingWords => 1,
        ErrorType::DisorderWords => 2,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values {
        n += 1;
        sum += v;
    }
    (n, if n == 0 { 0.0 } else { sum / n as f64 })
}

impl EvalReport {
    /// Pure aggregation: unweighted arithmetic means per group with
    /// deterministic row order.
    pub fn from_records(records: &[SampleRecord]) -> EvalReport {
        let mut groups: BTreeMap<(usize, usize), Vec<&SampleRecord>> = BTreeMap::new();
        for r in records {
            groups
                .entry((format_order(r.format), budget_order(r.budget)))
                .or_default()
                .push(r);
        }

        let mut rows = Vec::new();
        for rs in groups.values() {
            let (n, f_half_mean) = mean(rs.iter().map(|r| r.f_half));
            let (_, acc_mean) = mean(rs.iter().map(|r| f64::from(r.acc)));
            let (_, time_mean_s) = mean(rs.iter().map(|r| r.wall_time_s));
            let (n_ttfa, ttfa_mean) = mean(rs.iter().filter_map(|r| r.time_to_first_answer_s));
            rows.push(FormatBudgetRow {
                format: rs[0].format,
                budget: rs[0].budget,
                n,
                f_half_mean,
                acc_mean,
                time_mean_s,
                ttfa_mean_s: (n_ttfa > 0).then_some(ttfa_mean),
            });
        }

        let mut deltas = Vec::new();
        let mut warnings = Vec::new();
        for fmt in OutputFormat::ALL {
            let full = rows.iter().find(|r| r.format == fmt && r.budget == BudgetKind::Full);
            let limited = rows.iter().find(|r| r.format == fmt && r.budget == BudgetKind::Limited);
            match (full, limited) {
                (Some(full), Some(limited)) => {
                    let pct = |f: f64, l: f64| (f != 0.0).then(|| (l - f) / f * 100.0);
                    deltas.push(DeltaRow {
                        format: fmt,
                        acc_delta_pct: pct(full.acc_mean, limited.acc_mean),
                        time_delta_pct: pct(full.time_mean_s, limited.time_mean_s),
                    });
                }
                (Some(_), None) | (None, Some(_)) => {
                    warnings.push(format!(
                        "format {fmt}: only one budget present; delta row omitted"
                    ));
                }
                (None, None) => {}
            }
        }

        let mut type_groups: BTreeMap<(usize, usize, usize), Vec<&SampleRecord>> = BTreeMap::new();
        for r in records {
            type_groups
                .entry((format_order(r.format), budget_order(r.budget), error_order(r.error_type)))
                .or_default()
                .push(r);
        }
        let error_type_rows = type_groups
            .values()
            .map(|rs| {
                let (n, acc_mean) = mean(rs.iter().map(|r| f64::from(r.acc)));
                ErrorTypeRow {
                    format: rs[0].format,
                    budget: rs[0].budget,
                    error_type: rs[0].error_type,
                    n,
                    acc_mean,
                }
            })
            .collect();

        EvalReport { rows, deltas, error_type_rows, warnings }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Evaluation report\n\n## Budget comparison\n\n");
        out.push_str("| Format | Budget | N | F0.5 | Acc | Time (s) | TTFA (s) |\n");
        out.push_str("|---|---|---:|---:|---:|---:|---:|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {:.3} | {:.3} | {:.3} | {} |\n",
                r.format,
                r.budget,
                r.n,
                r.f_half_mean,
                r.acc_mean,
                r.time_mean_s,
                r.ttfa_mean_s.map_or("-".to_string(), |v| format!("{v:.3}")),
            ));
        }
        if !self.deltas.is_empty() {
            out.push_str("\n## Change from full to limited budget\n\n");
            out.push_str("| Format | Δ% Acc | Δ% Time |\n|---|---:|---:|\n");
            for d in &self.deltas {
                let cell = |v: Option<f64>| v.map_or("n/a".to_string(), |p| format!("{p:.2}"));
                out.push_str(&format!(
                    "| {} | {} | {} |\n",
                    d.format,
                    cell(d.acc_delta_pct),
                    cell(d.time_delta_pct)
                ));
            }
        }
        if !self.error_type_rows.is_empty() {
            out.push_str("\n## Accuracy by error type\n\n");
            out.push_str("| Format | Budget | Wrong words | Missing words | Disorder words |\n");
            out.push_str("|---|---|---:|---:|---:|\n");
            let mut keys: Vec<(OutputFormat, BudgetKind)> =
                self.error_type_rows.iter().map(|r| (r.format, r.budget)).collect();
            keys.dedup();
            for (fmt, budget) in keys {
                let cell = |e: ErrorType| {
                    self.error_type_rows
                        .iter()
                        .find(|r| r.format == fmt && r.budget == budget && r.error_type == e)
                        .map_or("-".to_string(), |r| format!("{:.4}", r.acc_mean))
                };
                out.push_str(&format!(
                    "| {fmt} | {budget} | {} | {} | {} |\n",
                    cell(ErrorType::WrongWords),
                    cell(ErrorType::MissingWords),
                    cell(ErrorType::DisorderWords)
                ));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("\n> warning: {w}\n"));
        }
        out
    }

    /// One flat CSV; the `section` column separates aggregate, delta, and
    /// error-type rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "section,format,budget,error_type,n,f_half_mean,acc_mean,time_mean_s,acc_delta_pct,time_delta_pct\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for r in &self.rows {
            out.push_str(&format!(
                "aggregate,{},{},,{},{:.6},{:.6},{:.6},,\n",
                r.format, r.budget, r.n, r.f_half_mean, r.acc_mean, r.time_mean_s
            ));
        }
        for d in &self.deltas {
            out.push_str(&format!(
                "delta,{},,,,,,,{},{}\n",
                d.format,
                opt(d.acc_delta_pct),
                opt(d.time_delta_pct)
            ));
        }
        for r in &self.error_type_rows {
            out.push_str(&format!(
                "error_type,{},{},{},{},,{:.6},,,\n",
                r.format, r.budget, r.error_type, r.n, r.acc_mean
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
