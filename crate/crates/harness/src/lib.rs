//! Experiment runner: configuration, batch runs into run directories,
//! report comparison, scenario forging and pairwise judging.

pub mod compare;
pub mod config;
pub mod error;
pub mod forging;
pub mod judging;
pub mod run;
pub mod store;

pub use config::{Backend, RunConfig};
pub use error::{HarnessError, Result};
