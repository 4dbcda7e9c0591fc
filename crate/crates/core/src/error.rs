use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("willingness {0} outside 1..=10")]
    WillingnessRange(i64),

    #[error("dangling-preference: persona `{persona}` references unknown item `{item}`")]
    DanglingPreference { persona: String, item: String },

    #[error("degenerate-feature: persona `{0}` has a zero feature vector")]
    DegenerateFeature(String),

    #[error("feature dimension mismatch: persona `{persona}` has {got} numeric features, expected {expected}")]
    FeatureDimension {
        persona: String,
        got: usize,
        expected: usize,
    },

    #[error("invalid selection request: {0}")]
    InvalidSelection(String),

    #[error("value `{value}` is not an allowed value of `{item}`")]
    ValueNotAllowed { item: String, value: String },

    #[error("malformed-vote: {0}")]
    MalformedVote(String),

    #[error("incomplete-scenario: persona `{persona}` has no preference for `{item}`")]
    IncompleteScenario { persona: String, item: String },

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: &'static str, found: String },

    #[error("json: {0}")]
    Json(String),

    /// A turn backend returned a record that breaks the protocol contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Failure inside a pluggable turn backend (e.g. an LLM transport). The
    /// harness treats these as resumable aborts.
    #[error("backend: {0}")]
    Backend(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
