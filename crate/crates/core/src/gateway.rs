//! Chat-completion gateway: a provider trait with an HTTP implementation and
//! a deterministic scripted mock, plus retry, transcript logging, and a
//! max-parallel-requests bound.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, thiserror::Error)]
pub enum GatewayError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider rate-limited the request")]
    RateLimited,
    #[error("provider error (status {status}): {body}")]
    Provider { status: u16, body: String },
    #[error("no scripted reply matches prompt: {0:?}")]
    UnscriptedPrompt(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }
}

/// A single chat-completion request. Sampling defaults are pinned to
/// temperature 0.0 and top_p 0.95 for reproducible judgments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            model: model.into(),
            messages,
            temperature: 0.0,
            top_p: 0.95,
            max_tokens: None,
        }
    }

    /// Single user-message request.
    pub fn user(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self::new(model, vec![ChatMessage::user(prompt)])
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GatewayError::InvalidRequest("top_p must be in (0, 1]".into()));
        }
        if self.max_tokens == Some(0) {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Content of the last user message, the prompt a scripted mock matches on.
    pub fn last_user_message(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    /// The JSON body sent over the wire by the HTTP provider.
    pub fn to_wire_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("request serializes")
    }

    /// Stable hash of the outgoing payload, recorded in transcripts.
    pub fn request_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        let digest = Sha256::digest(&bytes);
        format!("{digest:x}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ChatResponse {
    pub content: String,
    pub provider_meta: BTreeMap<String, serde_json::Value>,
    pub latency_ms: u64,
}

/// Anything that can answer a chat request. Implementations must be safely
/// callable from multiple in-flight tasks.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// How a scripted reply is matched against the last user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Matcher {
    Exact(String),
    Substring(String),
}

impl Matcher {
    pub fn matches(&self, prompt: &str) -> bool {
        match self {
            Matcher::Exact(s) => prompt == s,
            Matcher::Substring(s) => prompt.contains(s.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScriptEntry {
    pub matcher: Matcher,
    pub reply: String,
}

impl ScriptEntry {
    pub fn substring(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        Self { matcher: Matcher::Substring(pattern.into()), reply: reply.into() }
    }

    pub fn exact(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        Self { matcher: Matcher::Exact(pattern.into()), reply: reply.into() }
    }
}

/// On-disk form of one script entry (line-delimited JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptRecord {
    pub match_type: String,
    pub pattern: String,
    pub reply: String,
}

/// Deterministic scripted provider: replies with the first entry whose
/// matcher fires on the last user message.
pub struct MockChatProvider {
    entries: Vec<ScriptEntry>,
}

/// Build a scripted mock provider from ordered fixtures.
pub fn script_mock(entries: Vec<ScriptEntry>) -> MockChatProvider {
    MockChatProvider { entries }
}

impl MockChatProvider {
    pub fn from_script_text(text: &str) -> Result<Self, GatewayError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ScriptRecord = serde_json::from_str(line).map_err(|e| {
                GatewayError::InvalidRequest(format!("script line {}: {e}", lineno + 1))
            })?;
            let matcher = match record.match_type.as_str() {
                "exact" => Matcher::Exact(record.pattern),
                "substring" => Matcher::Substring(record.pattern),
                other => {
                    return Err(GatewayError::InvalidRequest(format!(
                        "script line {}: unknown match_type `{other}`",
                        lineno + 1
                    )))
                }
            };
            entries.push(ScriptEntry { matcher, reply: record.reply });
        }
        Ok(Self { entries })
    }
}

impl ChatProvider for MockChatProvider {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let prompt = req.last_user_message().unwrap_or("");
        for entry in &self.entries {
            if entry.matcher.matches(prompt) {
                let mut meta = BTreeMap::new();
                meta.insert("provider".to_string(), serde_json::json!("mock"));
                return Ok(ChatResponse {
                    content: entry.reply.clone(),
                    provider_meta: meta,
                    latency_ms: 0,
                });
            }
        }
        let snippet: String = prompt.chars().take(120).collect();
        Err(GatewayError::UnscriptedPrompt(snippet))
    }
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// HTTP provider speaking the common chat-completion JSON protocol:
/// POST `{model, messages, temperature, top_p}`, read the first choice's
/// message content. The API credential comes from an environment variable.
pub struct HttpChatProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpChatProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), api_key, client })
    }

    /// Read the API key from `env_var` (missing variable means no credential).
    pub fn from_env(endpoint: impl Into<String>, env_var: &str) -> Result<Self, GatewayError> {
        Self::new(endpoint, std::env::var(env_var).ok())
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let mut builder = self.client.post(&self.endpoint).json(&req.to_wire_json());
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(GatewayError::RateLimited);
        }
        let body = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Provider { status: status.as_u16(), body });
        }
        let wire: WireResponse = serde_json::from_str(&body).map_err(|e| {
            GatewayError::Provider { status: status.as_u16(), body: format!("bad response: {e}") }
        })?;
        let choice = wire.choices.into_iter().next().ok_or(GatewayError::Provider {
            status: status.as_u16(),
            body: "response has no choices".into(),
        })?;
        Ok(ChatResponse {
            content: choice.message.content,
            provider_meta: BTreeMap::new(),
            latency_ms: 0,
        })
    }
}

/// One transcript line per provider attempt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub request_hash: String,
    pub prompt: String,
    pub response: String,
    pub timestamp: u64,
}

/// Line-delimited transcript sink shared across in-flight requests.
pub struct TranscriptLog {
    sink: Mutex<Box<dyn Write + Send>>,
}

impl TranscriptLog {
    pub fn new(sink: Box<dyn Write + Send>) -> Self {
        Self { sink: Mutex::new(sink) }
    }

    pub fn to_file(path: &std::path::Path) -> std::io::Result<Self> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(Box::new(file)))
    }

    /// In-memory sink, readable through the returned handle.
    pub fn in_memory() -> (Self, Arc<Mutex<Vec<u8>>>) {
        let buffer = Arc::new(Mutex::new(Vec::new()));
        let handle = Arc::clone(&buffer);
        let log = Self::new(Box::new(SharedBuffer(buffer)));
        (log, handle)
    }

    pub fn append(&self, record: &TranscriptRecord) {
        let line = serde_json::to_string(record).expect("record serializes");
        let mut sink = self.sink.lock().expect("transcript lock");
        let _ = writeln!(sink, "{line}");
        let _ = sink.flush();
    }
}

struct SharedBuffer(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().expect("buffer lock").extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Counting semaphore bounding in-flight provider calls.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self { permits: Mutex::new(permits), available: Condvar::new() }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphoreGuard { sem: self }
    }
}

struct SemaphoreGuard<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.sem.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.sem.available.notify_one();
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryConfig {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self { max_attempts: 3, base_delay: Duration::from_millis(100) }
    }
}

pub const DEFAULT_MAX_PARALLEL: usize = 4;

/// Wraps a provider with rate-limit retry, transcript logging, and the
/// max-parallel bound. Cloneable and shareable across worker threads.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    retry: RetryConfig,
    transcript: Option<Arc<TranscriptLog>>,
    limiter: Arc<Semaphore>,
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Self::with_config(provider, RetryConfig::default(), DEFAULT_MAX_PARALLEL, None)
    }

    pub fn with_config(
        provider: Arc<dyn ChatProvider>,
        retry: RetryConfig,
        max_parallel: usize,
        transcript: Option<Arc<TranscriptLog>>,
    ) -> Self {
        Self {
            provider,
            retry,
            transcript,
            limiter: Arc::new(Semaphore::new(max_parallel.max(1))),
        }
    }

    /// Issue one completion, retrying rate-limited attempts with exponential
    /// backoff. Every attempt is appended to the transcript log.
    pub fn chat(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let _permit = self.limiter.acquire();
        let hash = req.request_hash();
        let prompt = req.last_user_message().unwrap_or("").to_string();
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            let start = Instant::now();
            let result = self.provider.complete(req);
            if let Some(log) = &self.transcript {
                let response = match &result {
                    Ok(resp) => resp.content.clone(),
                    Err(e) => format!("<error: {e}>"),
                };
                log.append(&TranscriptRecord {
                    request_hash: hash.clone(),
                    prompt: prompt.clone(),
                    response,
                    timestamp: unix_millis(),
                });
            }
            match result {
                Ok(mut resp) => {
                    resp.latency_ms = start.elapsed().as_millis() as u64;
                    resp.provider_meta
                        .insert("attempts".to_string(), serde_json::json!(attempt));
                    return Ok(resp);
                }
                Err(GatewayError::RateLimited) if attempt < self.retry.max_attempts => {
                    let backoff = self.retry.base_delay * 2u32.saturating_pow(attempt - 1);
                    std::thread::sleep(backoff);
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// A gateway bound to a model name; the shape most pipeline code wants.
#[derive(Clone)]
pub struct ChatClient {
    gateway: Gateway,
    model: String,
}

impl ChatClient {
    pub fn new(gateway: Gateway, model: impl Into<String>) -> Self {
        Self { gateway, model: model.into() }
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Single-user-message completion with default sampling.
    pub fn ask(&self, prompt: &str) -> Result<ChatResponse, GatewayError> {
        self.gateway.chat(&ChatRequest::user(&self.model, prompt))
    }
}
