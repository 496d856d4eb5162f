//! Deterministic discrete-event simulator of a two-tier edge/cloud system
//! for remote industrial sites: a federation of edge nodes on nearby rigs,
//! linked by WLAN, plus a distant cloud datacenter reachable only over a
//! high-latency satellite link.
//!
//! Each arriving task carries a per-type deadline. A service balancer routes
//! latency-tolerant tasks to the cloud and allocates urgent tasks across the
//! federation in immediate mode, using per-(type, node) completion-time and
//! per-(node, node) transfer-time estimates maintained as normal
//! distributions from observed history. Three allocation policies are
//! provided:
//!
//! * `hps`  — pick the node with the highest probability of finishing the
//!   task before its deadline, convolving transfer and completion
//!   distributions for remote candidates;
//! * `mect` — pick the node with the minimum expected completion time
//!   (computation mean only);
//! * `scc`  — pick the node with the maximum expected slack, dropping tasks
//!   whose slack is non-positive everywhere.
//!
//! Runs are seeded and fully reproducible: identical `(config, seed)` pairs
//! produce byte-identical reports and event traces, regardless of sweep
//! parallelism.

pub mod config;
pub mod engine;
pub mod estimator;
pub mod heuristics;
pub mod metrics;
pub mod runner;
pub mod stats;
pub mod taskmodel;
pub mod workload;

use std::fmt::Display;

/// Errors surfaced to the user: bad files, bad config values, or invalid
/// simulation parameters. Contract violations inside the engine itself
/// (unknown matrix indices, double-recorded tasks) panic instead, since they
/// indicate bugs rather than user input.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid `{key}`: {constraint}")]
    Config { key: String, constraint: String },
}

impl SimError {
    pub fn config(key: impl Into<String>, constraint: impl Display) -> Self {
        SimError::Config {
            key: key.into(),
            constraint: constraint.to_string(),
        }
    }
}

pub use config::SimulationConfig;
pub use engine::{run, run_full, RunOptions, SimOutcome};
pub use heuristics::Heuristic;
pub use metrics::RunReport;
