//! Query-correction toolkit.
//!
//! Everything needed to build and evaluate a low-latency query-correction
//! model around any chat-completion endpoint:
//!
//! - [`corpus`]: noisy-query dataset construction (wrong / missing /
//!   disordered units) from clean query corpora.
//! - [`textedit`]: unit-level edit extraction and the edit-overlap F0.5 /
//!   exact-match metrics.
//! - [`format`]: the three tagged output grammars (reasoning-answer,
//!   answer-reasoning, and the answer-reasoning-answer sandwich), parsing,
//!   prompt rendering, and SFT-data restructuring.
//! - [`rewards`]: accuracy, format, and consistency rewards with the
//!   unified structural term.
//! - [`modelio`]: chat-completion backends (live HTTP, deterministic mock,
//!   recorded replay) with retry, token budgets, and latency capture.
//! - [`sampler`]: margin-based rejection sampling to build RL training
//!   pools.
//! - [`evaluator`]: full- vs limited-token-budget evaluation with
//!   per-error-type reporting.
//! - [`simlab`]: finite tabular policies, exact marginalization checks, and
//!   a group-relative policy-gradient trainer.

pub mod corpus;
pub mod evaluator;
pub mod format;
pub mod modelio;
pub mod rewards;
pub mod sampler;
pub mod textedit;
