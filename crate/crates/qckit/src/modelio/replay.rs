//! Session recording and deterministic replay.
//!
//! A session file is JSONL of request/response entries keyed by the request
//! fingerprint. Replaying the same file reproduces texts, token counts, and
//! latencies byte-for-byte, making networked experiments offline-repeatable.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    Backend, BackendError, FatalError, GenerationRequest, GenerationResult, request_fingerprint,
};

/// One recorded exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEntry {
    pub request_hash: String,
    pub prompt: String,
    pub params: SessionParams,
    pub texts: Vec<String>,
    /// Completion tokens per sampled text.
    pub usage: Vec<u32>,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_to_first_answer_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub n: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SessionEntry {
    pub fn from_exchange(req: &GenerationRequest, res: &GenerationResult) -> Self {
        SessionEntry {
            request_hash: request_fingerprint(req),
            prompt: req.prompt.clone(),
            params: SessionParams {
                max_tokens: req.max_tokens,
                temperature: req.temperature,
                n: req.n,
                seed: req.seed,
            },
            texts: res.texts.clone(),
            usage: res.completion_tokens.clone(),
            latency_s: res.wall_time_s,
            time_to_first_answer_s: res.time_to_first_answer_s,
        }
    }
}

pub fn load_session(path: &Path) -> Result<Vec<SessionEntry>, BackendError> {
    let file = File::open(path).map_err(io_err)?;
    let mut entries = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: SessionEntry = serde_json::from_str(&line)
            .map_err(|e| BackendError::Fatal(FatalError::Protocol(format!("bad session line: {e}"))))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Content digest of a session file; stable across replays of the same
/// recording.
pub fn session_digest(path: &Path) -> Result<String, BackendError> {
    let bytes = std::fs::read(path).map_err(io_err)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn io_err(e: std::io::Error) -> BackendError {
    BackendError::Fatal(FatalError::Io(e.to_string()))
}

/// Serves recorded responses by request fingerprint; unknown requests are a
/// fatal `MissingRecording`.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    entries: HashMap<String, SessionEntry>,
}

impl ReplayBackend {
    pub fn new(entries: Vec<SessionEntry>) -> Self {
        let entries = entries.into_iter().map(|e| (e.request_hash.clone(), e)).collect();
        ReplayBackend { entries }
    }

    pub fn open(path: &Path) -> Result<Self, BackendError> {
        Ok(ReplayBackend::new(load_session(path)?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let hash = request_fingerprint(req);
        let entry = self.entries.get(&hash).ok_or_else(|| {
            BackendError::Fatal(FatalError::MissingRecording {
                hash: hash.clone(),
                prompt: req.prompt.clone(),
            })
        })?;
        Ok(GenerationResult {
            texts: entry.texts.clone(),
            completion_tokens: entry.usage.clone(),
            wall_time_s: entry.latency_s,
            time_to_first_answer_s: entry.time_to_first_answer_s,
        })
    }

    fn kind(&self) -> &'static str {
        "replay"
    }
}

/// Wraps any backend and appends every exchange to a session file as it
/// happens, so partial sessions survive aborts.
pub struct RecordingBackend<B> {
    inner: B,
    writer: Mutex<BufWriter<File>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn create(inner: B, path: &Path) -> Result<Self, BackendError> {
        let file = File::create(path).map_err(io_err)?;
        Ok(RecordingBackend { inner, writer: Mutex::new(BufWriter::new(file)) })
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let res = self.inner.generate(req)?;
        let entry = SessionEntry::from_exchange(req, &res);
        let mut writer = self.writer.lock().unwrap();
        serde_json::to_writer(&mut *writer, &entry)
            .map_err(|e| BackendError::Fatal(FatalError::Io(e.to_string())))?;
        writer.write_all(b"\n").map_err(io_err)?;
        writer.flush().map_err(io_err)?;
        Ok(res)
    }

    fn kind(&self) -> &'static str {
        "record"
    }
}

/// Drive `backend` over `requests` sequentially, persisting every exchange
/// to `path`. Returns the results in request order.
pub fn record_session(
    backend: &dyn Backend,
    requests: &[GenerationRequest],
    path: &Path,
) -> Result<Vec<GenerationResult>, BackendError> {
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    let mut results = Vec::with_capacity(requests.len());
    for req in requests {
        let res = backend.generate(req)?;
        let entry = SessionEntry::from_exchange(req, &res);
        serde_json::to_writer(&mut writer, &entry)
            .map_err(|e| BackendError::Fatal(FatalError::Io(e.to_string())))?;
        writer.write_all(b"\n").map_err(io_err)?;
        results.push(res);
    }
    writer.flush().map_err(io_err)?;
    Ok(results)
}
