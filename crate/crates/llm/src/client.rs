//! Chat-completion transports: HTTP, recorded fixtures, and a retry wrapper.

use std::collections::HashMap;
use std::io::Read as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LlmError, TransportError};

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const API_KEY_VAR: &str = "OPENAI_API_KEY";

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
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Canonical key used to match recorded fixtures.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

/// Model and sampling settings for agent and judge calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub base_url: String,
    pub model: String,
    pub judge_model: String,
    pub temperature: f64,
    /// Budget for phase-1 proposals and proposer updates.
    pub proposal_max_tokens: u32,
    /// Budget for appraisals, votes and judge verdicts.
    pub appraisal_max_tokens: u32,
    pub timeout_secs: u64,
    pub api_key_env: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            model: "gpt-4.1-mini-2025-04-14".into(),
            judge_model: "gpt-4.1-2025-04-14".into(),
            temperature: 0.4,
            proposal_max_tokens: 512,
            appraisal_max_tokens: 256,
            timeout_secs: 60,
            api_key_env: API_KEY_VAR.into(),
        }
    }
}

pub trait ChatTransport: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError>;
}

impl<T: ChatTransport + ?Sized> ChatTransport for &T {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(req)
    }
}

impl<T: ChatTransport + ?Sized> ChatTransport for Arc<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(req)
    }
}

impl<T: ChatTransport + ?Sized> ChatTransport for Box<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        (**self).complete(req)
    }
}

/// Transport backed by a closure; handy for stubs.
pub struct FnTransport<F>(pub F);

impl<F> ChatTransport for FnTransport<F>
where
    F: Fn(&ChatRequest) -> Result<String, TransportError> + Send + Sync,
{
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        (self.0)(req)
    }
}

/// OpenAI-compatible `/chat/completions` over blocking HTTP.
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: String,
}

impl HttpTransport {
    pub fn new(base_url: &str, api_key: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key: api_key.into(),
        }
    }

    /// Reads the credential from `var`.
    pub fn from_env(base_url: &str, var: &str, timeout: Duration) -> Result<Self, TransportError> {
        let key = std::env::var(var).map_err(|_| TransportError::MissingCredential(var.to_string()))?;
        Ok(Self::new(base_url, key, timeout))
    }
}

fn classify(status: u16, body: String) -> TransportError {
    match status {
        401 | 403 => TransportError::Auth(status),
        408 => TransportError::Timeout,
        429 => TransportError::RateLimited,
        500..=599 => TransportError::Server(status),
        _ => TransportError::Rejected { status, body },
    }
}

/// Pulls `choices[0].message.content` out of a completion body.
pub fn extract_content(body: &str) -> Result<String, TransportError> {
    let v: Value = serde_json::from_str(body).map_err(|e| TransportError::Protocol(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| TransportError::Protocol("no choices[0].message.content".into()))
}

impl ChatTransport for HttpTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let body = serde_json::to_string(req).map_err(|e| TransportError::Protocol(e.to_string()))?;
        let resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .content_type("application/json")
            .send(body.as_str());
        let mut resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(TransportError::Timeout),
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => return Err(TransportError::Timeout),
            Err(e) => return Err(TransportError::Network(e.to_string())),
        };
        let status = resp.status().as_u16();
        let mut text = String::new();
        resp.body_mut()
            .as_reader()
            .read_to_string(&mut text)
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify(status, text));
        }
        extract_content(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// Retries transient failures with capped exponential backoff and counts
/// requests.
pub struct Retrying<T> {
    inner: T,
    policy: RetryPolicy,
    sleeper: Sleeper,
    requests: AtomicU64,
}

impl<T: ChatTransport> Retrying<T> {
    pub fn new(inner: T, policy: RetryPolicy) -> Self {
        Self::with_sleeper(inner, policy, Arc::new(std::thread::sleep))
    }

    pub fn with_sleeper(inner: T, policy: RetryPolicy, sleeper: Sleeper) -> Self {
        Self {
            inner,
            policy,
            sleeper,
            requests: AtomicU64::new(0),
        }
    }

    /// Requests sent, retries included.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }
}

impl<T: ChatTransport> ChatTransport for Retrying<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.requests.fetch_add(1, Ordering::Relaxed);
            match self.inner.complete(req) {
                Err(e) if e.is_transient() && attempt < self.policy.max_attempts => {
                    (self.sleeper)(self.policy.delay(attempt));
                }
                other => return other,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub request: ChatRequest,
    pub response: String,
}

pub fn read_fixtures(path: &Path) -> Result<Vec<FixtureRecord>, LlmError> {
    let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| LlmError::Io(format!("{}: {e}", path.display()))))
        .collect()
}

pub fn write_fixtures(path: &Path, records: &[FixtureRecord]) -> Result<(), LlmError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| LlmError::Io(e.to_string()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))
}

/// Replays recorded responses keyed by the exact request. Repeated identical
/// requests get successive recordings, then the last one again.
pub struct FixtureTransport {
    by_request: HashMap<String, Vec<String>>,
    served: Mutex<HashMap<String, usize>>,
}

impl FixtureTransport {
    pub fn new(records: Vec<FixtureRecord>) -> Self {
        let mut by_request: HashMap<String, Vec<String>> = HashMap::new();
        for r in records {
            by_request.entry(r.request.fingerprint()).or_default().push(r.response);
        }
        Self {
            by_request,
            served: Mutex::new(HashMap::new()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::new(read_fixtures(path)?))
    }
}

impl ChatTransport for FixtureTransport {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let key = req.fingerprint();
        let responses = self.by_request.get(&key).ok_or_else(|| {
            let last = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
            TransportError::FixtureMiss(last.chars().take(80).collect())
        })?;
        let mut served = self.served.lock().expect("fixture lock");
        let n = served.entry(key).or_insert(0);
        let out = responses[(*n).min(responses.len() - 1)].clone();
        *n += 1;
        Ok(out)
    }
}

/// Passes requests through and keeps every successful exchange.
pub struct Recording<T> {
    inner: T,
    records: Mutex<Vec<FixtureRecord>>,
}

impl<T: ChatTransport> Recording<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            records: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        self.records.lock().expect("recording lock").clone()
    }
}

impl<T: ChatTransport> ChatTransport for Recording<T> {
    fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
        let out = self.inner.complete(req)?;
        self.records.lock().expect("recording lock").push(FixtureRecord {
            request: req.clone(),
            response: out.clone(),
        });
        Ok(out)
    }
}
