//! Scoring, experiment drivers and CSV output for the MIMO-STCA processing chain.

pub mod config;
mod error;
pub mod experiment;
pub mod metrics;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{EvalError, Result};
pub use experiment::{Method, Pipeline};
