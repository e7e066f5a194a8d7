//! Margin-based rejection sampling: sample N trajectories per input, judge
//! each by the edit-overlap F0.5 of its first answer, and keep inputs where
//! at least one trajectory is acceptable.

use serde::{Deserialize, Serialize};

use crate::corpus::QueryPair;
use crate::format::{OutputFormat, PromptTemplates, first_answer};
use crate::modelio::{Backend, BackendError, GenerationRequest, generate_batch};
use crate::textedit::f_half_score;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Independent trajectories per input.
    pub n: u32,
    /// Acceptable means F0.5 strictly greater than this.
    pub accept_threshold: f64,
    /// Also drop inputs where every trajectory is acceptable (the model
    /// already solves them consistently).
    pub reject_if_all_pass: bool,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n: 4,
            accept_threshold: 0.0,
            reject_if_all_pass: false,
            temperature: 0.7,
            max_tokens: 256,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n < 1 {
            return Err("n must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.accept_threshold) {
            return Err(format!("accept_threshold must be in [0,1), got {}", self.accept_threshold));
        }
        if self.max_tokens < 1 {
            return Err("max_tokens must be at least 1".into());
        }
        Ok(())
    }
}

/// Per-input sampling outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryVerdict {
    pub pair_id: String,
    pub texts: Vec<String>,
    pub f_scores: Vec<f64>,
    pub acceptable_count: u32,
    pub kept: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub total: usize,
    pub kept: usize,
    pub rejected_all_fail: usize,
    pub rejected_all_pass: usize,
    /// Inputs whose generation failed (backend error); never kept.
    pub failed: usize,
}

#[derive(Debug)]
pub struct FilterOutcome {
    pub verdicts: Vec<TrajectoryVerdict>,
    pub summary: PoolSummary,
    /// Set when a fatal backend error aborted the run; the verdicts cover
    /// what completed before the abort.
    pub fatal: Option<BackendError>,
}

/// Judge one trajectory: extract the first answer (falling back to the raw
/// text when no answer span exists), score it, and compare against the
/// threshold.
pub fn judge_trajectory(text: &str, pair: &QueryPair, threshold: f64) -> (bool, f64) {
    let hypothesis = first_answer(text).unwrap_or_else(|| text.trim().to_string());
    let f = f_half_score(&hypothesis, &pair.q_noise, &pair.q_clean);
    (f > threshold, f)
}

fn keep(acceptable: u32, n: u32, reject_if_all_pass: bool) -> bool {
    acceptable > 0 && (!reject_if_all_pass || acceptable < n)
}

/// Sample and judge every pair, building the RL training pool. Retryable
/// backend errors are retried by the backend itself; a fatal error stops
/// the run with partial verdicts.
pub fn filter_pool(
    pairs: &[QueryPair],
    backend: &dyn Backend,
    cfg: &SamplingConfig,
    parallelism: usize,
    templates: &PromptTemplates,
) -> FilterOutcome {
    let requests: Vec<GenerationRequest> = pairs
        .iter()
        .map(|p| GenerationRequest {
            prompt: templates.render(&p.q_noise, OutputFormat::Sandwich),
            max_tokens: cfg.max_tokens,
            temperature: cfg.temperature,
            n: cfg.n,
            seed: None,
        })
        .collect();
    let results = generate_batch(backend, &requests, parallelism, true);

    let mut verdicts = Vec::with_capacity(pairs.len());
    let mut summary = PoolSummary { total: pairs.len(), ..PoolSummary::default() };
    let mut fatal = None;
    for (pair, result) in pairs.iter().zip(results) {
        match result {
            Some(Ok(res)) => {
                let mut f_scores = Vec::with_capacity(res.texts.len());
                let mut acceptable = 0u32;
                for text in &res.texts {
                    let (ok, f) = judge_trajectory(text, pair, cfg.accept_threshold);
                    acceptable += u32::from(ok);
                    f_scores.push(f);
                }
                let kept = keep(acceptable, cfg.n, cfg.reject_if_all_pass);
                if kept {
                    summary.kept += 1;
                } else if acceptable == 0 {
                    summary.rejected_all_fail += 1;
                } else {
                    summary.rejected_all_pass += 1;
                }
                verdicts.push(TrajectoryVerdict {
                    pair_id: pair.id.clone(),
                    texts: res.texts,
                    f_scores,
                    acceptable_count: acceptable,
                    kept,
                });
            }
            Some(Err(e)) => {
                summary.failed += 1;
                if e.is_fatal() && fatal.is_none() {
                    fatal = Some(e);
                }
            }
            None => summary.failed += 1,
        }
    }
    FilterOutcome { verdicts, summary, fatal }
}
