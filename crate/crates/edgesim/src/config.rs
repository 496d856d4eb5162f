//! Run configuration: schema, TOML parsing, validation, and the shipped
//! `paper_default` setup.
//!
//! Every invariant of every embedded type is checked by [`SimulationConfig::
//! validate`] before a single event runs; diagnostics name the first
//! offending key and the violated constraint.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::NetworkModel;
use crate::heuristics::Heuristic;
use crate::taskmodel::TaskType;
use crate::workload::{default_task_types, WorkloadSpec};
use crate::SimError;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming a directory in which relative config paths
/// are resolved when they do not exist in the working directory.
pub const CONFIG_DIR_ENV: &str = "EDGESIM_CONFIG_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: usize,
    pub mips: f64,
    pub cores: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSpec {
    pub mips: f64,
    pub cores: u32,
}

/// Link parameters in config units (bandwidths in Mbps for readability).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub wlan_bandwidth_mbps: f64,
    pub wlan_jitter_stddev_s: f64,
    pub sat_bandwidth_mbps: f64,
    pub sat_propagation_s: f64,
    pub sat_jitter_stddev_s: f64,
    /// Transfers never take less than this, in seconds.
    pub min_transfer_s: f64,
}

impl NetworkConfig {
    pub fn model(&self) -> NetworkModel {
        NetworkModel {
            wlan_bandwidth_bps: self.wlan_bandwidth_mbps * 1e6,
            wlan_jitter_stddev_s: self.wlan_jitter_stddev_s,
            sat_bandwidth_bps: self.sat_bandwidth_mbps * 1e6,
            sat_propagation_s: self.sat_propagation_s,
            sat_jitter_stddev_s: self.sat_jitter_stddev_s,
            min_transfer_s: self.min_transfer_s,
        }
    }
}

/// Estimator knobs: observation window, refresh cadence, and prior shapes.
///
/// ETC priors are `N(mean_factor * exec, stddev_factor * exec)` with
/// `exec = length_mean / mips` — the ground-truth execution time with
/// one-queue-slot pessimism and wide uncertainty. ETT priors are
/// `N(m, stddev_frac * m)` with `m = propagation + mean_input_size /
/// bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub window: usize,
    pub refresh_period_s: f64,
    pub etc_prior_mean_factor: f64,
    pub etc_prior_stddev_factor: f64,
    pub ett_prior_stddev_frac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub schema_version: u32,
    pub heuristic: Heuristic,
    pub seed: u64,
    pub horizon_s: f64,
    pub nodes: Vec<NodeSpec>,
    pub cloud: CloudSpec,
    pub network: NetworkConfig,
    pub estimator: EstimatorConfig,
    pub workload: WorkloadSpec,
    pub task_types: Vec<TaskType>,
}

impl SimulationConfig {
    /// The default experimental setup: six edge nodes with frozen
    /// heterogeneous MIPS ratings in [1500, 2500] and 8 cores each, one
    /// 40000-MIPS cloud behind a 0.57 s satellite link, 200 Mbps WLAN inside
    /// the federation, and four task types (two urgent, two tolerant).
    pub fn paper_default() -> Self {
        SimulationConfig {
            schema_version: SCHEMA_VERSION,
            heuristic: Heuristic::Hps,
            seed: 42,
            horizon_s: 600.0,
            nodes: [1662.0, 2381.0, 1524.0, 2107.0, 1895.0, 2293.0]
                .iter()
                .enumerate()
                .map(|(id, &mips)| NodeSpec { id, mips, cores: 8 })
                .collect(),
            cloud: CloudSpec {
                mips: 40000.0,
                cores: 64,
            },
            network: NetworkConfig {
                wlan_bandwidth_mbps: 200.0,
                wlan_jitter_stddev_s: 0.25,
                sat_bandwidth_mbps: 20.0,
                sat_propagation_s: 0.57,
                sat_jitter_stddev_s: 0.05,
                min_transfer_s: 0.001,
            },
            estimator: EstimatorConfig {
                window: 10,
                refresh_period_s: 0.25,
                etc_prior_mean_factor: 2.0,
                etc_prior_stddev_factor: 1.0,
                ett_prior_stddev_frac: 0.1,
            },
            workload: WorkloadSpec {
                num_applications: 50,
                tasks_per_app: [10, 40],
                type_mix: vec![0.3, 0.3, 0.2, 0.2],
                arrival_window_s: 90.0,
                task_interarrival_mean_s: 3.5,
                min_task_length_mi: 1.0,
                burst: None,
            },
            task_types: default_task_types(),
        }
    }

    /// Checks every schema invariant, naming the first offending key.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |key: &str, constraint: String| Err(SimError::config(key, constraint));

        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION} (got {})", self.schema_version),
            );
        }
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return bad("horizon_s", format!("must be > 0 (got {})", self.horizon_s));
        }
        if self.nodes.is_empty() {
            return bad("nodes", "at least one edge node required".into());
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return bad(
                    &format!("nodes[{i}].id"),
                    format!("ids must be 0..{} in order (got {})", self.nodes.len(), n.id),
                );
            }
            if !(n.mips > 0.0 && n.mips.is_finite()) {
                return bad(&format!("nodes[{i}].mips"), format!("must be > 0 (got {})", n.mips));
            }
            if n.cores < 1 {
                return bad(&format!("nodes[{i}].cores"), "must be >= 1".into());
            }
        }
        if !(self.cloud.mips > 0.0 && self.cloud.mips.is_finite()) {
            return bad("cloud.mips", format!("must be > 0 (got {})", self.cloud.mips));
        }
        if self.cloud.cores < 1 {
            return bad("cloud.cores", "must be >= 1".into());
        }

        let net = &self.network;
        for (key, v) in [
            ("network.wlan_bandwidth_mbps", net.wlan_bandwidth_mbps),
            ("network.sat_bandwidth_mbps", net.sat_bandwidth_mbps),
            ("network.min_transfer_s", net.min_transfer_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be > 0 (got {v})"));
            }
        }
        for (key, v) in [
            ("network.wlan_jitter_stddev_s", net.wlan_jitter_stddev_s),
            ("network.sat_propagation_s", net.sat_propagation_s),
            ("network.sat_jitter_stddev_s", net.sat_jitter_stddev_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, format!("must be >= 0 (got {v})"));
            }
        }

        let est = &self.estimator;
        if est.window < 1 {
            return bad("estimator.window", "must be >= 1".into());
        }
        if !(est.refresh_period_s > 0.0 && est.refresh_period_s.is_finite()) {
            return bad(
                "estimator.refresh_period_s",
                format!("must be > 0 (got {})", est.refresh_period_s),
            );
        }
        for (key, v) in [
            ("estimator.etc_prior_mean_factor", est.etc_prior_mean_factor),
            ("estimator.etc_prior_stddev_factor", est.etc_prior_stddev_factor),
            ("estimator.ett_prior_stddev_frac", est.ett_prior_stddev_frac),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, format!("must be >= 0 (got {v})"));
            }
        }
        if est.etc_prior_mean_factor <= 0.0 {
            return bad("estimator.etc_prior_mean_factor", "must be > 0".into());
        }

        if self.task_types.is_empty() {
            return bad("task_types", "at least one task type required".into());
        }
        for (i, t) in self.task_types.iter().enumerate() {
            let key = |f: &str| format!("task_types[{i}].{f}");
            if t.id != i {
                return bad(
                    &key("id"),
                    format!("ids must be 0..{} in order (got {})", self.task_types.len(), t.id),
                );
            }
            if !(t.length_dist.mean > 0.0 && t.length_dist.mean.is_finite()) {
                return bad(&key("length_dist.mean"), format!("must be > 0 (got {})", t.length_dist.mean));
            }
            if !(t.length_dist.stddev >= 0.0 && t.length_dist.stddev.is_finite()) {
                return bad(&key("length_dist.stddev"), format!("must be >= 0 (got {})", t.length_dist.stddev));
            }
            if !(t.input_kb >= 0.0 && t.input_kb.is_finite()) {
                return bad(&key("input_kb"), format!("must be >= 0 (got {})", t.input_kb));
            }
            if !(t.output_kb >= 0.0 && t.output_kb.is_finite()) {
                return bad(&key("output_kb"), format!("must be >= 0 (got {})", t.output_kb));
            }
            if !(t.beta > 0.0 && t.beta.is_finite()) {
                return bad(&key("beta"), format!("must be > 0 (got {})", t.beta));
            }
            if !(t.alpha >= 0.0 && t.alpha.is_finite()) {
                return bad(&key("alpha"), format!("must be >= 0 (got {})", t.alpha));
            }
            if !(t.epsilon_s >= 0.0 && t.epsilon_s.is_finite()) {
                return bad(&key("epsilon_s"), format!("must be >= 0 (got {})", t.epsilon_s));
            }
            // truncation sanity guard, checked here so sampling cannot fail
            // mid-run
            let limit = t.length_dist.mean + 10.0 * t.length_dist.stddev;
            if self.workload.min_task_length_mi >= limit {
                return bad(
                    "workload.min_task_length_mi",
                    format!(
                        "must be below length mean + 10*stddev = {limit} of task type {i}"
                    ),
                );
            }
        }

        let w = &self.workload;
        if w.tasks_per_app[0] < 1 || w.tasks_per_app[0] > w.tasks_per_app[1] {
            return bad(
                "workload.tasks_per_app",
                format!("need 1 <= min <= max (got [{}, {}])", w.tasks_per_app[0], w.tasks_per_app[1]),
            );
        }
        if w.type_mix.len() != self.task_types.len() {
            return bad(
                "workload.type_mix",
                format!(
                    "must have one weight per task type ({} != {})",
                    w.type_mix.len(),
                    self.task_types.len()
                ),
            );
        }
        if w.type_mix.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return bad("workload.type_mix", "weights must be >= 0".into());
        }
        let mix_sum: f64 = w.type_mix.iter().sum();
        if (mix_sum - 1.0).abs() > 1e-9 {
            return bad(
                "workload.type_mix",
                format!("weights must sum to 1 within 1e-9 (got {mix_sum})"),
            );
        }
        if !(w.arrival_window_s > 0.0 && w.arrival_window_s.is_finite()) {
            return bad(
                "workload.arrival_window_s",
                format!("must be > 0 (got {})", w.arrival_window_s),
            );
        }
        if !(w.task_interarrival_mean_s > 0.0 && w.task_interarrival_mean_s.is_finite()) {
            return bad(
                "workload.task_interarrival_mean_s",
                format!("must be > 0 (got {})", w.task_interarrival_mean_s),
            );
        }
        if !(w.min_task_length_mi > 0.0 && w.min_task_length_mi.is_finite()) {
            return bad(
                "workload.min_task_length_mi",
                format!("must be > 0 (got {})", w.min_task_length_mi),
            );
        }
        if let Some(b) = &w.burst {
            if !(b.start_s >= 0.0 && b.duration_s >= 0.0 && b.rate_multiplier > 0.0) {
                return bad(
                    "workload.burst",
                    "need start_s >= 0, duration_s >= 0, rate_multiplier > 0".into(),
                );
            }
        }
        Ok(())
    }

    /// Mean input size across task types, used for ETT priors which are per
    /// node pair rather than per type.
    pub fn mean_input_kb(&self) -> f64 {
        let sum: f64 = self.task_types.iter().map(|t| t.input_kb).sum();
        sum / self.task_types.len() as f64
    }
}

/// Reads, parses, and fully validates a config file.
pub fn parse_and_validate(path: &Path) -> Result<SimulationConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: SimulationConfig = toml::from_str(&text).map_err(|e| SimError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves a config path: an existing path wins; otherwise a relative path
/// is tried under `$EDGESIM_CONFIG_DIR`.
pub fn resolve_config_path(path: &Path) -> std::path::PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    if let Ok(dir) = std::env::var(CONFIG_DIR_ENV) {
        let candidate = Path::new(&dir).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    path.to_path_buf()
}
