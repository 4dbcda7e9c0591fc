//! Language-model backend for the negotiation protocol: prompt templates,
//! chat transports, response parsing, an agent policy and a pairwise judge.

pub mod agent;
pub mod client;
pub mod error;
pub mod judge;
pub mod parse;
pub mod prompts;

pub use agent::LlmPolicy;
pub use client::{ChatTransport, LlmConfig};
pub use error::{LlmError, ParseError, TransportError};
