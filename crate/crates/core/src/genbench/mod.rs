//! Workload generation, benchmark tasks and measurement.

mod config;
mod generate;
pub mod metrics;
pub mod resources;
mod runner;
pub mod synth;
mod tasks;

use std::io::BufRead;

use thiserror::Error;

pub use config::{format_duration, parse_duration, Format, GenConfig, GenType};
pub use generate::{
    consent_entries, consent_id, fixed_ratio_label, gen_consents, gen_epoch, gen_events, user_id, EventStream, LabeledEvent,
};
pub use metrics::{compute_stats, percentile, windowed_percentiles, LatencyRow, LatencyStats, StatsParams, WindowRow};
pub use runner::{
    run_config, run_task, write_outputs, CheckerSummary, MetricsReport, RunOptions, RunOutcome, StorageBytes, APP_TOPIC,
    CHECKER_GROUP, OUT_TOPIC,
};
pub use tasks::{lookup_task, task_table, Scenario, TaskLength, TaskSpec};

use crate::broker::BrokerError;
use crate::splog::SplogError;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("bad duration {0:?}: expected positive <integer><ns|us|ms|s|m|h> terms such as 1s or 1m30s")]
    BadDuration(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("cannot generate a violating event {index} for {user}: its consent admits every content")]
    GenerationStuck { user: String, index: u64 },
    #[error("percentile of an empty list")]
    EmptyInput,
    #[error("latencies line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Broker(#[from] BrokerError),
    #[error(transparent)]
    Splog(#[from] SplogError),
}

/// Recomputes the latency section of a report from `latencies.csv`.
pub fn recompute<R: BufRead>(latencies: R, params: StatsParams) -> Result<LatencyStats, GenError> {
    let mut rows = metrics::read_latencies(latencies)?;
    metrics::dedup_rows(&mut rows);
    Ok(compute_stats(&rows, params))
}
