//! Uncertainty estimation, evergreen scoring and self-knowledge evaluation
//! over recorded LLM generation traces.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod error;
pub mod evergreen;
pub mod jsonl;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod provenance;
pub mod selfknow;
pub mod uncertainty;

pub use error::{Error, Result};
