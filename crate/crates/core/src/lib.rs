//! Negotiation engine for groups of agents holding private preferences with
//! hidden willingness scores.
//!
//! The crate is organised bottom-up:
//!
//! - [`domain`]: shared value types, tone bands and scenario validation.
//! - [`forge`]: diverse persona selection, MoSCoW willingness derivation and
//!   conflict-aware group formation.
//! - [`policy`]: deterministic rule-based agent behaviour for every mode.
//! - [`protocol`]: the per-item propose / appraise / vote / update loop with
//!   consensus check and max-willingness fallback.
//! - [`metrics`]: group-decision and opponent-inference statistics.
//! - [`golden`]: reference negotiations with frozen expected traces.

pub mod domain;
pub mod error;
pub mod forge;
pub mod golden;
pub mod metrics;
pub mod policy;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
