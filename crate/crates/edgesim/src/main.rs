use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edgesim::config::{parse_and_validate, resolve_config_path, SimulationConfig};
use edgesim::heuristics::Heuristic;
use edgesim::runner::{self, Overrides, RunOutputs};
use edgesim::SimError;

/// Discrete-event simulator of a federated edge/cloud system with
/// deadline-aware task allocation.
#[derive(Parser)]
#[command(name = "edgesim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (TOML). Relative paths missing from the working directory
    /// are also tried under $EDGESIM_CONFIG_DIR. Defaults to the built-in
    /// paper_default setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Heuristic override: hps, mect, or scc.
    #[arg(long)]
    heuristic: Option<Heuristic>,
}

impl ConfigArgs {
    fn load(&self, apps: Option<u32>) -> Result<SimulationConfig, SimError> {
        let mut cfg = match &self.config {
            Some(path) => parse_and_validate(&resolve_config_path(path))?,
            None => SimulationConfig::paper_default(),
        };
        runner::apply_overrides(
            &mut cfg,
            &Overrides {
                seed: self.seed,
                heuristic: self.heuristic,
                apps,
            },
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the report CSV.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of applications override.
        #[arg(long)]
        apps: Option<u32>,
        /// Report CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the event trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the generated workload alongside the report.
        #[arg(long)]
        dump_workload: Option<PathBuf>,
        /// Write the end-of-run ETC/ETT matrices as JSON.
        #[arg(long)]
        dump_matrices: Option<PathBuf>,
    },
    /// Run a (heuristic x load x replication) sweep and write the aggregate
    /// CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated application counts, e.g. 50,100,150,200,250.
        #[arg(long, value_delimiter = ',', default_value = "50,100,150,200,250")]
        apps: Vec<u32>,
        /// Comma-separated heuristics to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![Heuristic::Hps, Heuristic::Mect, Heuristic::Scc])]
        heuristics: Vec<Heuristic>,
        /// Replications per cell.
        #[arg(long, default_value_t = 10)]
        reps: u32,
        /// Maximum concurrent runs.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Sweep CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one CSV row per run.
        #[arg(long)]
        per_run_out: Option<PathBuf>,
    },
    /// Parse and validate a config, reporting the first violation.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate the workload for a config and dump it without simulating.
    DumpWorkload {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of applications override.
        #[arg(long)]
        apps: Option<u32>,
        /// Output path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Run {
            config,
            apps,
            out,
            trace,
            dump_workload,
            dump_matrices,
        } => {
            let cfg = config.load(apps)?;
            runner::cmd_run(
                &cfg,
                &RunOutputs {
                    report: out,
                    trace,
                    dump_workload,
                    dump_matrices,
                },
            )?;
            Ok(())
        }
        Command::Sweep {
            config,
            apps,
            heuristics,
            reps,
            parallel,
            out,
            per_run_out,
        } => {
            let cfg = config.load(None)?;
            runner::cmd_sweep(
                &cfg,
                &apps,
                &heuristics,
                reps,
                parallel,
                out.as_deref(),
                per_run_out.as_deref(),
            )?;
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = config.load(None)?;
            println!(
                "ok: {} edge nodes, {} task types, heuristic {}",
                cfg.nodes.len(),
                cfg.task_types.len(),
                cfg.heuristic
            );
            Ok(())
        }
        Command::DumpWorkload { config, apps, out } => {
            let cfg = config.load(apps)?;
            runner::cmd_dump_workload(&cfg, out.as_deref())
        }
    }
}
