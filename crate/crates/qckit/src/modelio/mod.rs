//! Backends that turn prompts into model text: a live chat-completion HTTP
//! client, a deterministic scripted mock, and a recorded-replay store. All
//! of them honor token budgets and report wall-clock latency.

mod http;
mod mock;
mod replay;

pub use http::{HttpBackend, HttpBackendConfig, RetryPolicy};
pub use mock::{MockBackend, MockScript};
pub use replay::{RecordingBackend, ReplayBackend, SessionEntry, load_session, record_session, session_digest};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// One generation call: `n` sampled completions for a prompt under a token
/// budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, max_tokens: u32) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            max_tokens,
            temperature: 0.0,
            n: 1,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_tokens < 1 || self.n < 1 || self.temperature < 0.0 {
            return Err(BackendError::Fatal(FatalError::BadRequest {
                status: 0,
                body: format!(
                    "invalid request: max_tokens={}, n={}, temperature={}",
                    self.max_tokens, self.n, self.temperature
                ),
            }));
        }
        Ok(())
    }
}

/// Completions plus measured latency for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub texts: Vec<String>,
    pub completion_tokens: Vec<u32>,
    pub wall_time_s: f64,
    /// Seconds until the first complete answer span was available, when the
    /// backend can tell (mock and replay report a deterministic estimate;
    /// the non-streaming HTTP client reports none).
    pub time_to_first_answer_s: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RetryableError {
    #[error("request timed out")]
    Timeout,
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("rate limited (429): {body}")]
    RateLimited { body: String },
    #[error("connection failed: {0}")]
    Connection(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FatalError {
    #[error("bad request ({status}): {body}")]
    BadRequest { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Protocol(String),
    #[error("no recording for request hash {hash} (prompt {prompt:?})")]
    MissingRecording { hash: String, prompt: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Backend failures, split into the retry classes the batch driver and the
/// HTTP retry loop act on.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("retryable: {0}")]
    Retryable(#[from] RetryableError),
    #[error("fatal: {0}")]
    Fatal(#[from] FatalError),
}

impl BackendError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, BackendError::Fatal(_))
    }
}

/// A text generator. Implementations are safe to call from several threads
/// at once.
pub trait Backend: Send + Sync {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError>;

    /// Short name for logs and summaries.
    fn kind(&self) -> &'static str;
}

/// Stable fingerprint of a request (prompt + decoding parameters); the key
/// of session recordings.
pub fn request_fingerprint(req: &GenerationRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(req.prompt.as_bytes());
    hasher.update([0u8]);
    hasher.update(req.max_tokens.to_le_bytes());
    hasher.update(format!("{}", req.temperature).as_bytes());
    hasher.update(req.n.to_le_bytes());
    if let Some(seed) = req.seed {
        hasher.update(seed.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

/// Whitespace-piece token count: the token definition of the mock backend.
pub fn mock_token_count(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

/// Run requests with at most `parallelism` in flight; the output order
/// matches the input order. With `abort_on_fatal`, workers stop picking up
/// new requests after the first fatal error (already-running requests
/// finish; unstarted ones stay `None`).
pub fn generate_batch(
    backend: &dyn Backend,
    requests: &[GenerationRequest],
    parallelism: usize,
    abort_on_fatal: bool,
) -> Vec<Option<Result<GenerationResult, BackendError>>> {
    use std::sync::Mutex;
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

    let workers = parallelism.clamp(1, requests.len().max(1));
    let next = AtomicUsize::new(0);
    let aborted = AtomicBool::new(false);
    let results: Mutex<Vec<Option<Result<GenerationResult, BackendError>>>> =
        Mutex::new(vec![None; requests.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                loop {
                    if abort_on_fatal && aborted.load(Ordering::SeqCst) {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        return;
                    }
                    let res = backend.generate(&requests[i]);
                    if res.as_ref().is_err_and(|e| e.is_fatal()) {
                        aborted.store(true, Ordering::SeqCst);
                    }
                    results.lock().unwrap()[i] = Some(res);
                }
            });
        }
    });

    results.into_inner().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_sensitive_to_budget() {
        let a = GenerationRequest::new("p", 256);
        let mut b = a.clone();
        b.max_tokens = 20;
        assert_ne!(request_fingerprint(&a), request_fingerprint(&b));
        assert_eq!(request_fingerprint(&a), request_fingerprint(&a.clone()));
    }

    #[test]
    fn batch_preserves_order_and_multiset() {
        let backend = MockBackend::echo();
        let reqs: Vec<GenerationRequest> =
            (0..40).map(|i| GenerationRequest::new(format!("p{i}"), 16)).collect();
        let seq = generate_batch(&backend, &reqs, 1, false);
        let par = generate_batch(&backend, &reqs, 8, false);
        assert_eq!(seq, par);
        for (i, r) in par.iter().enumerate() {
            let texts = &r.as_ref().unwrap().as_ref().unwrap().texts;
            assert_eq!(texts[0], format!("p{i}"));
        }
    }

    #[test]
    fn request_validation() {
        let mut req = GenerationRequest::new("p", 1);
        assert!(req.validate().is_ok());
        req.max_tokens = 0;
        assert!(req.validate().is_err());
        req.max_tokens = 1;
        req.n = 0;
        assert!(req.validate().is_err());
    }
}
