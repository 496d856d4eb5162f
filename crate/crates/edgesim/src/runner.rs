//! Run and sweep orchestration: file outputs, override handling, and the
//! deterministic seed schedule for sweep cells.
//!
//! Sweep cell seeds are derived from the master seed through a fixed
//! SplitMix64 chain keyed by the heuristic's stable code, the application
//! count value, and the replication index — never by list positions — so
//! adding a heuristic or a load point to a sweep leaves every existing
//! cell's draws untouched.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SimulationConfig;
use crate::engine::{self, splitmix64, RunOptions, SimOutcome};
use crate::heuristics::Heuristic;
use crate::metrics::{aggregate_sweep, run_reports_csv, sweep_csv, RunReport, SweepRow};
use crate::taskmodel::Task;
use crate::SimError;

/// Field overrides applied on top of a parsed config (CLI flags beat the
/// config file, which beats built-in defaults).
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub heuristic: Option<Heuristic>,
    pub apps: Option<u32>,
}

pub fn apply_overrides(cfg: &mut SimulationConfig, ov: &Overrides) {
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(h) = ov.heuristic {
        cfg.heuristic = h;
    }
    if let Some(apps) = ov.apps {
        cfg.workload.num_applications = apps;
    }
}

/// Output destinations for one run.
#[derive(Debug, Clone, Default)]
pub struct RunOutputs {
    /// Report CSV path; `None` writes to stdout.
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub dump_workload: Option<PathBuf>,
    pub dump_matrices: Option<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), SimError> {
    fs::write(path, contents).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Executes one run and writes the requested artifacts. Returns the report.
pub fn cmd_run(cfg: &SimulationConfig, outputs: &RunOutputs) -> Result<RunReport, SimError> {
    let opts = RunOptions {
        record_trace: outputs.trace.is_some(),
    };
    let outcome = engine::run_full(cfg, cfg.seed, &opts)?;
    let csv = run_reports_csv(std::slice::from_ref(&outcome.report));
    match &outputs.report {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &outputs.trace {
        let trace = outcome.trace.as_deref().unwrap_or("");
        write_file(path, trace)?;
    }
    if let Some(path) = &outputs.dump_workload {
        write_file(path, &workload_dump(&outcome))?;
    }
    if let Some(path) = &outputs.dump_matrices {
        let json = serde_json::to_string_pretty(&outcome.matrices).expect("serializable dump");
        write_file(path, &json)?;
    }
    Ok(outcome.report)
}

fn workload_dump(outcome: &SimOutcome) -> String {
    tasks_dump(&outcome.tasks)
}

/// Structured text for a generated task stream: one line per task.
pub fn tasks_dump(tasks: &[Task]) -> String {
    let mut out = String::from("id,type,origin,arrival_s,length_mi,deadline_s\n");
    for t in tasks {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6}",
            t.id, t.type_id, t.origin, t.arrival_time, t.length_mi, t.deadline
        )
        .unwrap();
    }
    out
}

/// Generates and dumps the workload without running the simulation.
pub fn cmd_dump_workload(cfg: &SimulationConfig, out: Option<&Path>) -> Result<(), SimError> {
    cfg.validate()?;
    let tasks = engine::prepare_tasks(cfg, cfg.seed)?;
    let text = tasks_dump(&tasks);
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Deterministic seed for one sweep cell.
pub fn cell_seed(master: u64, heuristic: Heuristic, apps: u32, rep: u32) -> u64 {
    let mut s = splitmix64(master ^ 0x5EED_0F0E_D15E_A5E5);
    s = splitmix64(s ^ heuristic.code().wrapping_mul(0x9E37_79B9_7F4A_7C15));
    s = splitmix64(s ^ (apps as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    s = splitmix64(s ^ (rep as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
    s
}

/// Runs every (heuristic, apps, replication) cell of a sweep, up to
/// `parallelism` cells at a time, and aggregates the results. Output is
/// independent of the parallelism degree: cells are deterministic and are
/// joined in their declaration order.
pub fn sweep(
    base: &SimulationConfig,
    apps: &[u32],
    heuristics: &[Heuristic],
    replications: u32,
    parallelism: usize,
) -> Result<(Vec<RunReport>, Vec<SweepRow>), SimError> {
    if apps.is_empty() {
        return Err(SimError::config("sweep.apps", "no load points given"));
    }
    if heuristics.is_empty() {
        return Err(SimError::config("sweep.heuristics", "no heuristics given"));
    }
    if replications == 0 {
        return Err(SimError::config("sweep.reps", "need at least 1 replication"));
    }
    base.validate()?;

    let mut cells = Vec::new();
    for &h in heuristics {
        for &a in apps {
            for rep in 0..replications {
                cells.push((h, a, rep));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SimError::config("sweep.parallel", e.to_string()))?;

    let reports: Result<Vec<RunReport>, SimError> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(h, a, rep)| {
                let mut cfg = base.clone();
                cfg.heuristic = h;
                cfg.workload.num_applications = a;
                let seed = cell_seed(base.seed, h, a, rep);
                cfg.seed = seed;
                engine::run(&cfg, seed).map_err(|e| {
                    SimError::config(
                        format!("sweep cell (heuristic={h}, apps={a}, rep={rep})"),
                        e,
                    )
                })
            })
            .collect()
    });
    let reports = reports?;
    let rows = aggregate_sweep(&reports);
    Ok((reports, rows))
}

/// Runs a sweep and writes the aggregate CSV (and optionally the per-run
/// rows).
pub fn cmd_sweep(
    base: &SimulationConfig,
    apps: &[u32],
    heuristics: &[Heuristic],
    replications: u32,
    parallelism: usize,
    out: Option<&Path>,
    per_run_out: Option<&Path>,
) -> Result<Vec<SweepRow>, SimError> {
    let (reports, rows) = sweep(base, apps, heuristics, replications, parallelism)?;
    let csv = sweep_csv(&rows);
    match out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = per_run_out {
        write_file(path, &run_reports_csv(&reports))?;
    }
    Ok(rows)
}
