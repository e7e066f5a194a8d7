//! Deterministic scripted backend for tests and offline pipelines.
//!
//! Tokens are whitespace-delimited pieces; truncation keeps the first
//! `max_tokens` pieces, so a completion under a smaller budget is always a
//! byte-prefix of the same completion under a larger one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, GenerationRequest, GenerationResult, mock_token_count};
use crate::format::ANSWER_CLOSE;

/// Script configuration, loadable from JSON. `responses` keys are matched
/// first against the whole prompt, then as substrings (typically the noisy
/// query embedded in the prompt); `default` covers everything else.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub responses: HashMap<String, Vec<String>>,
    #[serde(default)]
    pub default: Vec<String>,
    /// Reported (not slept) seconds per emitted token.
    #[serde(default)]
    pub latency_per_token_s: f64,
    /// Reported fixed overhead in seconds.
    #[serde(default)]
    pub fixed_latency_s: f64,
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    script: MockScript,
    /// Ordered substring keys so lookup is deterministic.
    keys: Vec<String>,
    echo: bool,
}

impl MockBackend {
    pub fn new(mut script: MockScript) -> Self {
        // Canonicalize scripted texts to single-space joins so budget
        // truncation yields byte prefixes.
        for texts in script.responses.values_mut().chain(std::iter::once(&mut script.default)) {
            for t in texts.iter_mut() {
                *t = canonicalize(t);
            }
        }
        let mut keys: Vec<String> = script.responses.keys().cloned().collect();
        keys.sort();
        MockBackend { script, keys, echo: false }
    }

    /// A backend that returns each prompt verbatim; handy in tests.
    pub fn echo() -> Self {
        MockBackend { script: MockScript::default(), keys: Vec::new(), echo: true }
    }

    /// Script a single response for every prompt.
    pub fn constant(text: &str) -> Self {
        MockBackend::new(MockScript { default: vec![text.to_string()], ..MockScript::default() })
    }

    fn resolve(&self, prompt: &str) -> Vec<String> {
        if self.echo {
            return vec![canonicalize(prompt)];
        }
        if let Some(texts) = self.script.responses.get(prompt) {
            return texts.clone();
        }
        for key in &self.keys {
            if prompt.contains(key.as_str()) {
                return self.script.responses[key].clone();
            }
        }
        self.script.default.clone()
    }
}

fn canonicalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// First `max_tokens` whitespace pieces of `text`.
fn truncate(text: &str, max_tokens: u32) -> String {
    let pieces: Vec<&str> = text.split_whitespace().take(max_tokens as usize).collect();
    pieces.join(" ")
}

/// Token count after which the first complete answer span is closed, if
/// any.
fn tokens_to_first_answer(text: &str) -> Option<u32> {
    let mut assembled = String::new();
    for (i, piece) in text.split_whitespace().enumerate() {
        if !assembled.is_empty() {
            assembled.push(' ');
        }
        assembled.push_str(piece);
        if assembled.contains(ANSWER_CLOSE) {
            return Some(i as u32 + 1);
        }
    }
    None
}

impl Backend for MockBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let script = self.resolve(&req.prompt);
        let mut texts = Vec::with_capacity(req.n as usize);
        let mut completion_tokens = Vec::with_capacity(req.n as usize);
        for i in 0..req.n as usize {
            let full = if script.is_empty() { "" } else { script[i % script.len()].as_str() };
            let text = truncate(full, req.max_tokens);
            completion_tokens.push(mock_token_count(&text));
            texts.push(text);
        }
        let total_tokens: u32 = completion_tokens.iter().sum();
        let wall_time_s =
            self.script.fixed_latency_s + self.script.latency_per_token_s * f64::from(total_tokens);
        let time_to_first_answer_s = texts
            .first()
            .and_then(|t| tokens_to_first_answer(t))
            .map(|k| self.script.fixed_latency_s + self.script.latency_per_token_s * f64::from(k));
        Ok(GenerationResult { texts, completion_tokens, wall_time_s, time_to_first_answer_s })
    }

    fn kind(&self) -> &'static str {
        "mock"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(prompt: &str, max_tokens: u32, n: u32) -> GenerationRequest {
        GenerationRequest { prompt: prompt.into(), max_tokens, temperature: 0.7, n, seed: None }
    }

    #[test]
    fn scripted_response_is_deterministic() {
        let b = MockBackend::constant("<answer> x </answer>");
        let a = b.generate(&req("p", 64, 1)).unwrap();
        let c = b.generate(&req("p", 64, 1)).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.texts, vec!["<answer> x </answer>"]);
        assert_eq!(a.completion_tokens, vec![3]);
    }

    #[test]
    fn budget_prefix_property() {
        let b = MockBackend::constant("one two three four five six seven");
        let small = b.generate(&req("p", 3, 1)).unwrap();
        let large = b.generate(&req("p", 6, 1)).unwrap();
        assert!(large.texts[0].starts_with(&small.texts[0]));
        assert_eq!(small.completion_tokens, vec![3]);
        assert_eq!(small.texts[0], "one two three");
    }

    #[test]
    fn substring_key_resolution() {
        let mut responses = HashMap::new();
        responses.insert("aXcd".to_string(), vec!["<answer> abcd </answer>".to_string()]);
        let b = MockBackend::new(MockScript { responses, default: vec!["fallback".into()], ..Default::default() });
        let hit = b.generate(&req("please fix: aXcd now", 64, 1)).unwrap();
        assert_eq!(hit.texts[0], "<answer> abcd </answer>");
        let miss = b.generate(&req("something else", 64, 1)).unwrap();
        assert_eq!(miss.texts[0], "fallback");
    }

    #[test]
    fn n_samples_cycle_script() {
        let script = MockScript {
            default: vec!["first".into(), "second".into()],
            ..Default::default()
        };
        let b = MockBackend::new(script);
        let out = b.generate(&req("p", 8, 4)).unwrap();
        assert_eq!(out.texts, vec!["first", "second", "first", "second"]);
    }

    #[test]
    fn simulated_latency_and_ttfa() {
        let script = MockScript {
            default: vec!["<answer> ab </answer> <reasoning> words words </reasoning> <answer> ab </answer>".into()],
            latency_per_token_s: 0.1,
            fixed_latency_s: 0.05,
            ..Default::default()
        };
        let b = MockBackend::new(script);
        let out = b.generate(&req("p", 64, 1)).unwrap();
        assert_eq!(out.completion_tokens, vec![10]);
        assert!((out.wall_time_s - (0.05 + 1.0)).abs() < 1e-12);
        // "</answer>" completes at the third token.
        assert!((out.time_to_first_answer_s.unwrap() - (0.05 + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn truncation_drops_answer_tag() {
        let b = MockBackend::constant("<reasoning> long chain of thought here </reasoning> <answer> ab </answer>");
        let out = b.generate(&req("p", 4, 1)).unwrap();
        assert!(!out.texts[0].contains(ANSWER_CLOSE));
        assert_eq!(out.time_to_first_answer_s, None);
    }
}
