//! Live chat-completion client over the widely deployed
//! `POST {base}/v1/chat/completions` protocol, with exponential-backoff
//! retry for transient failures.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{
    Backend, BackendError, FatalError, GenerationRequest, GenerationResult, RetryableError,
    mock_token_count,
};

/// Backoff schedule for retryable failures (timeouts, 429, 5xx).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub base_delay_s: f64,
    pub factor: f64,
    pub max_attempts: u32,
    pub jitter: bool,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { base_delay_s: 0.5, factor: 2.0, max_attempts: 5, jitter: true }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        let base = self.base_delay_s * self.factor.powi(attempt as i32);
        let secs = if self.jitter {
            // Full jitter in [0.5, 1.5) of the nominal delay.
            base * (0.5 + rand::random::<f64>())
        } else {
            base
        };
        Duration::from_secs_f64(secs.max(0.0))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpBackendConfig {
    /// Server root or root plus `/v1`; the chat-completions path is
    /// appended when missing.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token; requests go out
    /// unauthenticated when it is unset or empty.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

fn default_timeout_s() -> f64 {
    60.0
}

impl HttpBackendConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        HttpBackendConfig {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: default_api_key_env(),
            timeout_s: default_timeout_s(),
            retry: RetryPolicy::default(),
        }
    }

    fn endpoint(&self) -> String {
        let root = self.base_url.trim_end_matches('/');
        if root.ends_with("/chat/completions") {
            root.to_string()
        } else if root.ends_with("/v1") {
            format!("{root}/chat/completions")
        } else {
            format!("{root}/v1/chat/completions")
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    max_tokens: u32,
    temperature: f64,
    n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    index: u32,
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    completion_tokens: Option<u32>,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build()
            .map_err(|e| BackendError::Fatal(FatalError::Io(e.to_string())))?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let endpoint = config.endpoint();
        Ok(HttpBackend { config, endpoint, api_key, client })
    }

    fn attempt(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [ChatMessage { role: "user", content: &req.prompt }],
            max_tokens: req.max_tokens,
            temperature: req.temperature,
            n: req.n,
            seed: req.seed,
        };
        let started = Instant::now();
        let mut builder = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(classify_transport)?;
        let status = response.status();
        let text = response.text().map_err(classify_transport)?;
        let wall_time_s = started.elapsed().as_secs_f64();

        if status.as_u16() == 429 {
            return Err(RetryableError::RateLimited { body: snippet(&text) }.into());
        }
        if status.is_server_error() {
            return Err(RetryableError::Server { status: status.as_u16(), body: snippet(&text) }.into());
        }
        if !status.is_success() {
            return Err(FatalError::BadRequest { status: status.as_u16(), body: snippet(&text) }.into());
        }

        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| FatalError::Protocol(format!("{e} in body {}", snippet(&text))))?;
        if parsed.choices.len() != req.n as usize {
            return Err(FatalError::Protocol(format!(
                "expected {} choices, got {}",
                req.n,
                parsed.choices.len()
            ))
            .into());
        }
        let mut choices = parsed.choices;
        choices.sort_by_key(|c| c.index);
        let texts: Vec<String> =
            choices.into_iter().map(|c| c.message.content.unwrap_or_default()).collect();
        // Provider usage is aggregate; it is exact only for single-sample
        // requests. Otherwise fall back to whitespace-piece counts.
        let completion_tokens: Vec<u32> = match parsed.usage.and_then(|u| u.completion_tokens) {
            Some(tokens) if req.n == 1 => vec![tokens],
            _ => texts.iter().map(|t| mock_token_count(t)).collect(),
        };
        Ok(GenerationResult { texts, completion_tokens, wall_time_s, time_to_first_answer_s: None })
    }
}

fn classify_transport(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        RetryableError::Timeout.into()
    } else if e.is_connect() {
        RetryableError::Connection(e.to_string()).into()
    } else {
        FatalError::Protocol(e.to_string()).into()
    }
}

fn snippet(body: &str) -> String {
    let trimmed = body.trim();
    if trimmed.len() <= 400 {
        trimmed.to_string()
    } else {
        let mut end = 400;
        while !trimmed.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &trimmed[..end])
    }
}

impl Backend for HttpBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let mut last_err = None;
        for attempt in 0..self.config.retry.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.config.retry.delay(attempt - 1));
            }
            match self.attempt(req) {
                Ok(res) => return Ok(res),
                Err(e @ BackendError::Fatal(_)) => return Err(e),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn kind(&self) -> &'static str {
        "http"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serve one scripted (status, body) response per connection, then stop.
    fn serve(script: Vec<(u16, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in script {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let mut buf = [0u8; 65536];
                let mut seen = Vec::new();
                // Read until the end of the request body.
                loop {
                    match stream.read(&mut buf) {
                        Ok(0) => break,
                        Ok(k) => {
                            seen.extend_from_slice(&buf[..k]);
                            if request_complete(&seen) {
                                break;
                            }
                        }
                        Err(_) => break,
                    }
                }
                let reason = match status {
                    200 => "OK",
                    400 => "Bad Request",
                    429 => "Too Many Requests",
                    500 => "Internal Server Error",
                    _ => "Unknown",
                };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}")
    }

    fn request_complete(seen: &[u8]) -> bool {
        let Some(header_end) = seen.windows(4).position(|w| w == b"\r\n\r\n") else {
            return false;
        };
        let headers = String::from_utf8_lossy(&seen[..header_end]);
        let content_length = headers
            .lines()
            .find_map(|l| {
                let (name, value) = l.split_once(':')?;
                name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse::<usize>().ok())?
            })
            .unwrap_or(0);
        seen.len() >= header_end + 4 + content_length
    }

    fn ok_body(contents: &[&str]) -> String {
        let choices: Vec<String> = contents
            .iter()
            .enumerate()
            .map(|(i, c)| format!(r#"{{"index":{i},"message":{{"role":"assistant","content":"{c}"}}}}"#))
            .collect();
        format!(r#"{{"choices":[{}],"usage":{{"completion_tokens":7}}}}"#, choices.join(","))
    }

    fn config(base_url: &str) -> HttpBackendConfig {
        HttpBackendConfig {
            retry: RetryPolicy { base_delay_s: 0.001, factor: 2.0, max_attempts: 3, jitter: false },
            timeout_s: 2.0,
            api_key_env: "QCKIT_TEST_NO_SUCH_KEY".into(),
            ..HttpBackendConfig::new(base_url, "test-model")
        }
    }

    #[test]
    fn success_parses_choices_and_usage() {
        let url = serve(vec![(200, ok_body(&["<answer>x</answer>"]))]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let res = backend.generate(&GenerationRequest::new("fix it", 64)).unwrap();
        assert_eq!(res.texts, vec!["<answer>x</answer>"]);
        assert_eq!(res.completion_tokens, vec![7]);
        assert!(res.wall_time_s >= 0.0);
    }

    #[test]
    fn retries_transient_errors_then_succeeds() {
        let url = serve(vec![
            (500, "{\"error\":\"boom\"}".into()),
            (429, "{\"error\":\"slow down\"}".into()),
            (200, ok_body(&["ok"])),
        ]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let res = backend.generate(&GenerationRequest::new("p", 8)).unwrap();
        assert_eq!(res.texts, vec!["ok"]);
    }

    #[test]
    fn bad_request_is_fatal_with_body() {
        let url = serve(vec![(400, "{\"error\":\"bad prompt\"}".into())]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let err = backend.generate(&GenerationRequest::new("p", 8)).unwrap_err();
        match err {
            BackendError::Fatal(FatalError::BadRequest { status, body }) => {
                assert_eq!(status, 400);
                assert!(body.contains("bad prompt"));
            }
            other => panic!("expected fatal bad request, got {other:?}"),
        }
    }

    #[test]
    fn malformed_body_is_fatal_protocol_error() {
        let url = serve(vec![(200, "not json".into())]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let err = backend.generate(&GenerationRequest::new("p", 8)).unwrap_err();
        assert!(matches!(err, BackendError::Fatal(FatalError::Protocol(_))));
    }

    #[test]
    fn exhausted_retries_return_last_retryable() {
        let url = serve(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
        ]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let err = backend.generate(&GenerationRequest::new("p", 8)).unwrap_err();
        assert!(matches!(err, BackendError::Retryable(RetryableError::Server { status: 500, .. })));
    }

    #[test]
    fn multi_sample_choices_sorted_by_index() {
        let url = serve(vec![(
            200,
            r#"{"choices":[{"index":1,"message":{"content":"second"}},{"index":0,"message":{"content":"first"}}]}"#.into(),
        )]);
        let backend = HttpBackend::new(config(&url)).unwrap();
        let mut req = GenerationRequest::new("p", 8);
        req.n = 2;
        let res = backend.generate(&req).unwrap();
        assert_eq!(res.texts, vec!["first", "second"]);
        // No usable aggregate usage for n>1: whitespace-piece fallback.
        assert_eq!(res.completion_tokens, vec![1, 1]);
    }

    #[test]
    fn endpoint_path_normalization() {
        assert_eq!(
            HttpBackendConfig::new("http://h:1/", "m").endpoint(),
            "http://h:1/v1/chat/completions"
        );
        assert_eq!(
            HttpBackendConfig::new("http://h:1/v1", "m").endpoint(),
            "http://h:1/v1/chat/completions"
        );
        assert_eq!(
            HttpBackendConfig::new("http://h:1/v1/chat/completions", "m").endpoint(),
            "http://h:1/v1/chat/completions"
        );
    }
}
