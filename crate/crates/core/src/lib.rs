//! Unified structured-knowledge grounding toolkit: typed records, text
//! linearization, output codecs, formal validity checks, metrics, corpus
//! tooling, few-shot prompting and multi-task mixtures.

pub mod codec;
pub mod corpus;
pub mod error;
pub mod fewshot;
pub mod format;
pub mod knowledge;
pub mod linearize;
pub mod metrics;
pub mod mixture;
mod rng;
pub mod validate;

pub use error::{Error, Result};
