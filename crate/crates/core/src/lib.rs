//! Explainability metrics for classifiers: rule complexity and
//! understandability, Shapley attributions with fidelity curves, and the two
//! case-study pipelines built on them.

pub mod data;
pub mod error;
pub mod fidelity;
pub mod models;
pub mod pipeline;
pub mod plot;
pub mod shapley;
pub mod taxonomy;

pub use error::{Error, Result};
