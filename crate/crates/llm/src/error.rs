use thiserror::Error;

/// Transport failures, kept distinct so callers can decide what to retry.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (HTTP 429)")]
    RateLimited,
    #[error("server error (HTTP {0})")]
    Server(u16),
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("network: {0}")]
    Network(String),
    #[error("unexpected response shape: {0}")]
    Protocol(String),
    #[error("no recorded response for request: {0}")]
    FixtureMiss(String),
    #[error("missing credential: set {0}")]
    MissingCredential(String),
}

impl TransportError {
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            TransportError::Timeout | TransportError::RateLimited | TransportError::Server(_) | TransportError::Network(_)
        )
    }
}

/// Model output that does not satisfy the reply contract of its phase.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed-json: {0}")]
    MalformedJson(String),
    #[error("missing-field: {0}")]
    MissingField(String),
    #[error("bad-field: `{field}` has unusable value `{got}`")]
    BadField { field: String, got: String },
    #[error("value-mismatch: `{value}` is not an exact member of {allowed:?}")]
    ValueMismatch { value: String, allowed: Vec<String> },
    #[error("missing-tag: {0}")]
    MissingTag(&'static str),
    #[error("contract: {0}")]
    Contract(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("missing-binding: {}", .0.join(", "))]
    MissingBinding(Vec<String>),
    #[error("template: {0}")]
    Template(String),
    #[error("fixture io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] mind_core::Error),
}

impl From<LlmError> for mind_core::Error {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Core(c) => c,
            other => mind_core::Error::Backend(other.to_string()),
        }
    }
}
