use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{file}: scenario `{scenario}` is invalid:\n  {}", .violations.join("\n  "))]
    InvalidScenario {
        file: PathBuf,
        scenario: String,
        violations: Vec<String>,
    },
    #[error("{file}: {reason}")]
    BadInput { file: PathBuf, reason: String },
    #[error("run aborted after {completed} scenario(s): {reason}; resume with --resume (checkpoint at {checkpoint})")]
    Aborted {
        completed: usize,
        reason: String,
        checkpoint: PathBuf,
    },
    #[error("reports cover different scenario sets: {0}")]
    ScenarioMismatch(String),
    #[error(transparent)]
    Core(#[from] mind_core::Error),
    #[error(transparent)]
    Llm(#[from] mind_llm::LlmError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
