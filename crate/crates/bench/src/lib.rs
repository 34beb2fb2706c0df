//! Monte Carlo experiments for signal-matrix-model identification and control.
//!
//! Each experiment turns an [`ExperimentConfig`] into per-run [`Record`]s plus
//! grouped summaries. Run `r` draws all randomness from seed `base_seed + r`,
//! split into independent streams for offline input, offline noise and
//! online noise, so any single run can be reproduced in isolation.

pub mod config;
pub mod experiment;
pub mod scenario;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentId, SystemSpec};
pub use experiment::{run_experiment, write_report, ExperimentReport, Meta, RunFailure};
pub use stats::{aggregate, Record, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot summarize an empty group")]
    EmptyGroup,
    #[error(transparent)]
    Core(#[from] smm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
