//! The discrete-event engine: task arrivals, balancer decisions, inter-node
//! transfers, FCFS multi-core execution, and periodic matrix refresh ticks.
//!
//! One run is strictly single-threaded and deterministic: events dispatch in
//! (time, insertion-sequence) order, and all randomness comes from two
//! ChaCha streams (workload, transfers) derived from the master seed by
//! fixed offsets, so changing one stochastic concern never perturbs the
//! other's draws. Identical `(config, seed)` pairs produce byte-identical
//! reports and traces.
//!
//! Semantics worth knowing:
//!
//! * tasks always run to completion; a miss is recorded when completion
//!   exceeds the deadline, and completion exactly at the deadline is a hit
//!   (SCC drops are the only exception — they never enter a queue);
//! * a task occupies exactly one core for `length / mips` seconds; lengths
//!   are stochastic, the execution realization is not;
//! * transfer time is `input_size / bandwidth + |N(0, jitter)|` (plus
//!   propagation on the satellite link), floored at a configured minimum;
//!   result return transfers are not modeled.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::SimulationConfig;
use crate::estimator::{CellDump, EtcMatrix, EttMatrix};
use crate::heuristics::{self, Tier};
use crate::metrics::{MetricsCollector, Outcome, RunReport};
use crate::stats::NormalDist;
use crate::taskmodel::{
    assign_deadline, avg_completion_over_edges, NodeId, SimTime, Task, TaskId, TaskState, Urgency,
};
use crate::workload;
use crate::SimError;

/// Link model in base units (bits per second, seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkModel {
    pub wlan_bandwidth_bps: f64,
    pub wlan_jitter_stddev_s: f64,
    pub sat_bandwidth_bps: f64,
    pub sat_propagation_s: f64,
    pub sat_jitter_stddev_s: f64,
    pub min_transfer_s: f64,
}

impl NetworkModel {
    /// Deterministic part of a transfer: propagation (satellite only) plus
    /// serialization time, floored at the transfer minimum. This is also the
    /// "ground truth" mean used for deadlines and ETT priors.
    pub fn deterministic_transfer_s(&self, to_cloud: bool, size_kb: f64) -> f64 {
        let bits = size_kb * 8000.0;
        let t = if to_cloud {
            self.sat_propagation_s + bits / self.sat_bandwidth_bps
        } else {
            bits / self.wlan_bandwidth_bps
        };
        t.max(self.min_transfer_s)
    }

    /// One realized transfer: deterministic part plus half-normal jitter.
    pub fn sample_transfer_s<R: Rng>(&self, to_cloud: bool, size_kb: f64, rng: &mut R) -> f64 {
        let jitter_sd = if to_cloud {
            self.sat_jitter_stddev_s
        } else {
            self.wlan_jitter_stddev_s
        };
        let z: f64 = rng.sample(StandardNormal);
        let base = self.deterministic_transfer_s(to_cloud, size_kb);
        (base + (z * jitter_sd).abs()).max(self.min_transfer_s)
    }
}

/// SplitMix64 finalizer; the basis for every derived seed in the simulator.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one named RNG stream of a run.
pub fn stream_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

const WORKLOAD_STREAM: u64 = 1;
const TRANSFER_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    TaskArrival(TaskId),
    /// Task delivery at a destination slot (edge index or the cloud slot).
    TransferComplete(TaskId, usize),
    ExecComplete(TaskId, usize),
    MatrixRefresh,
}

impl EventKind {
    fn name(&self) -> &'static str {
        match self {
            EventKind::TaskArrival(_) => "task_arrival",
            EventKind::TransferComplete(..) => "transfer_complete",
            EventKind::ExecComplete(..) => "exec_complete",
            EventKind::MatrixRefresh => "matrix_refresh",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

/// Min-heap ordering on (time, seq): a total, deterministic dispatch order.
struct QueuedEvent(Event);

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.0.time == other.0.time && self.0.seq == other.0.seq
    }
}
impl Eq for QueuedEvent {}
impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .partial_cmp(&self.0.time)
            .expect("finite event times")
            .then(other.0.seq.cmp(&self.0.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<QueuedEvent>,
    seq: u64,
}

impl EventQueue {
    fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(QueuedEvent(Event { time, seq, kind }));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|q| q.0)
    }
}

/// One compute resource (an edge node, or the cloud as the last slot):
/// `cores` identical cores fed by a single FIFO queue.
struct NodeState {
    mips: f64,
    cores: u32,
    busy_cores: u32,
    fifo: VecDeque<TaskId>,
}

/// Terminal fate of one task in a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TaskFate {
    Completed { node_slot: usize, completion: SimTime },
    Dropped,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixDump {
    pub etc: Vec<CellDump>,
    pub ett: Vec<CellDump>,
}

/// Everything a finished run produces.
pub struct SimOutcome {
    pub report: RunReport,
    /// Final task records (states all Completed or Dropped), by task id.
    pub tasks: Vec<Task>,
    /// Fate per task id.
    pub fates: Vec<TaskFate>,
    /// Line-delimited event trace, when requested.
    pub trace: Option<String>,
    pub matrices: MatrixDump,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub record_trace: bool,
}

/// Generates the workload for `(config, seed)` and assigns every task its
/// absolute deadline from design-time means.
pub fn prepare_tasks(cfg: &SimulationConfig, seed: u64) -> Result<Vec<Task>, SimError> {
    let draws = workload::generate(
        &cfg.workload,
        &cfg.task_types,
        cfg.nodes.len(),
        cfg.horizon_s,
        stream_seed(seed, WORKLOAD_STREAM),
    )?;
    let mips: Vec<f64> = cfg.nodes.iter().map(|n| n.mips).collect();
    let net = cfg.network.model();

    let mut avg_completion = Vec::with_capacity(cfg.task_types.len());
    let mut d_comm = Vec::with_capacity(cfg.task_types.len());
    for t in &cfg.task_types {
        avg_completion.push(avg_completion_over_edges(t, &mips)?);
        // tier communication latency: mean ground-truth transfer from the
        // origin to the rest of its tier. Uniform link parameters make this
        // origin-independent; a single-node federation has no peers.
        d_comm.push(match t.urgency {
            Urgency::Urgent => {
                if cfg.nodes.len() > 1 {
                    net.deterministic_transfer_s(false, t.input_kb)
                } else {
                    0.0
                }
            }
            Urgency::Tolerant => net.deterministic_transfer_s(true, t.input_kb),
        });
    }

    draws
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let deadline = assign_deadline(
                d.arrival,
                &cfg.task_types[d.type_id],
                avg_completion[d.type_id],
                d_comm[d.type_id],
            )?;
            Ok(Task::new(
                i as TaskId,
                d.type_id,
                d.origin,
                d.arrival,
                d.length_mi,
                deadline,
            ))
        })
        .collect()
}

/// Runs the full simulation for `(config, seed)`: workload generation,
/// deadline assignment, and the event loop. Returns the finalized report.
pub fn run(cfg: &SimulationConfig, seed: u64) -> Result<RunReport, SimError> {
    Ok(run_full(cfg, seed, &RunOptions::default())?.report)
}

pub fn run_full(cfg: &SimulationConfig, seed: u64, opts: &RunOptions) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    let tasks = prepare_tasks(cfg, seed)?;
    simulate_tasks(cfg, tasks, seed, opts)
}

/// Runs the event loop over an explicit, deadline-assigned task list. Used
/// by `run_full` and directly by micro-scenario tests.
pub fn simulate_tasks(
    cfg: &SimulationConfig,
    tasks: Vec<Task>,
    seed: u64,
    opts: &RunOptions,
) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    let mut sim = Sim::new(cfg, tasks, seed, opts.record_trace);
    sim.run();
    Ok(sim.finish())
}

struct Sim<'a> {
    cfg: &'a SimulationConfig,
    net: NetworkModel,
    edge_ids: Vec<NodeId>,
    cloud_slot: usize,
    nodes: Vec<NodeState>,
    tasks: Vec<Task>,
    arrived_at_node: Vec<SimTime>,
    transfer_started: Vec<SimTime>,
    fates: Vec<Option<TaskFate>>,
    etc: EtcMatrix,
    ett: EttMatrix,
    queue: EventQueue,
    clock: SimTime,
    unfinished: usize,
    transfer_rng: ChaCha8Rng,
    metrics: MetricsCollector,
    trace: Option<String>,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a SimulationConfig, tasks: Vec<Task>, seed: u64, record_trace: bool) -> Self {
        let n_edges = cfg.nodes.len();
        let cloud_slot = n_edges;
        let net = cfg.network.model();

        let mut nodes: Vec<NodeState> = cfg
            .nodes
            .iter()
            .map(|n| NodeState {
                mips: n.mips,
                cores: n.cores,
                busy_cores: 0,
                fifo: VecDeque::new(),
            })
            .collect();
        nodes.push(NodeState {
            mips: cfg.cloud.mips,
            cores: cfg.cloud.cores,
            busy_cores: 0,
            fifo: VecDeque::new(),
        });

        let est = &cfg.estimator;
        let etc_priors = cfg
            .task_types
            .iter()
            .map(|t| {
                nodes
                    .iter()
                    .map(|n| {
                        let exec = t.length_dist.mean / n.mips;
                        NormalDist::new(
                            est.etc_prior_mean_factor * exec,
                            est.etc_prior_stddev_factor * exec,
                        )
                    })
                    .collect()
            })
            .collect();
        let mean_input = cfg.mean_input_kb();
        let n_slots = n_edges + 1;
        let ett_priors = (0..n_slots)
            .map(|s| {
                (0..n_slots)
                    .map(|d| {
                        if s == d {
                            NormalDist::zero()
                        } else {
                            let to_cloud = s == cloud_slot || d == cloud_slot;
                            let m = net.deterministic_transfer_s(to_cloud, mean_input);
                            NormalDist::new(m, est.ett_prior_stddev_frac * m)
                        }
                    })
                    .collect()
            })
            .collect();

        let metrics = MetricsCollector::new(
            cfg.heuristic.name(),
            cfg.workload.num_applications,
            seed,
            &cfg.task_types,
            n_edges,
            tasks.len(),
        );

        let num_tasks = tasks.len();
        let mut sim = Sim {
            cfg,
            net,
            edge_ids: (0..n_edges).collect(),
            cloud_slot,
            nodes,
            arrived_at_node: vec![0.0; num_tasks],
            transfer_started: vec![0.0; num_tasks],
            fates: vec![None; num_tasks],
            tasks,
            etc: EtcMatrix::from_priors(etc_priors, est.window),
            ett: EttMatrix::from_priors(ett_priors, est.window),
            queue: EventQueue::default(),
            clock: 0.0,
            unfinished: num_tasks,
            transfer_rng: ChaCha8Rng::seed_from_u64(stream_seed(seed, TRANSFER_STREAM)),
            metrics,
            trace: record_trace.then(String::new),
        };
        for task in &sim.tasks {
            debug_assert_eq!(task.state, TaskState::Created);
        }
        for i in 0..sim.tasks.len() {
            let t = sim.tasks[i].arrival_time;
            sim.queue.schedule(t, EventKind::TaskArrival(i as TaskId));
        }
        if !sim.tasks.is_empty() {
            sim.queue
                .schedule(cfg.estimator.refresh_period_s, EventKind::MatrixRefresh);
        }
        sim
    }

    fn run(&mut self) {
        while let Some(ev) = self.queue.pop() {
            debug_assert!(ev.time >= self.clock, "event scheduled in the past");
            self.clock = ev.time;
            self.trace_event(&ev);
            match ev.kind {
                EventKind::TaskArrival(task) => self.handle_arrival(task),
                EventKind::TransferComplete(task, dest) => self.handle_transfer_complete(task, dest),
                EventKind::ExecComplete(task, node) => self.handle_exec_complete(task, node),
                EventKind::MatrixRefresh => self.handle_matrix_refresh(),
            }
        }
    }

    fn trace_event(&mut self, ev: &Event) {
        let Some(trace) = self.trace.as_mut() else {
            return;
        };
        let (task, node): (Option<TaskId>, Option<usize>) = match ev.kind {
            EventKind::TaskArrival(t) => (Some(t), Some(self.tasks[t as usize].origin)),
            EventKind::TransferComplete(t, n) | EventKind::ExecComplete(t, n) => (Some(t), Some(n)),
            EventKind::MatrixRefresh => (None, None),
        };
        Self::write_trace_line(trace, self.cloud_slot, ev.time, ev.kind.name(), task, node);
    }

    fn write_trace_line(
        trace: &mut String,
        cloud_slot: usize,
        time: SimTime,
        kind: &str,
        task: Option<TaskId>,
        node: Option<usize>,
    ) {
        let task = task.map_or("-".to_string(), |t| t.to_string());
        let node = match node {
            None => "-".to_string(),
            Some(n) if n == cloud_slot => "cloud".to_string(),
            Some(n) => n.to_string(),
        };
        writeln!(trace, "{time} {kind} task={task} node={node}").unwrap();
    }

    /// Immediate-mode balancer: route by urgency, then either forward over
    /// the satellite, run the configured heuristic, or drop (SCC).
    fn handle_arrival(&mut self, task_id: TaskId) {
        let idx = task_id as usize;
        debug_assert_eq!(self.tasks[idx].state, TaskState::Created);
        let ttype = &self.cfg.task_types[self.tasks[idx].type_id];

        match heuristics::route_by_urgency(&self.tasks[idx], &self.cfg.task_types) {
            Tier::Cloud => {
                let dt = self
                    .net
                    .sample_transfer_s(true, ttype.input_kb, &mut self.transfer_rng);
                self.start_transfer(idx, self.cloud_slot, dt);
            }
            Tier::Federation => {
                let decision = heuristics::select(
                    self.cfg.heuristic,
                    &self.tasks[idx],
                    &self.edge_ids,
                    self.tasks[idx].origin,
                    &self.etc,
                    &self.ett,
                    self.clock,
                );
                if decision.dropped {
                    self.tasks[idx].state = TaskState::Dropped;
                    self.fates[idx] = Some(TaskFate::Dropped);
                    self.metrics
                        .record_outcome(&self.tasks[idx], Outcome::Dropped, None);
                    self.unfinished -= 1;
                } else {
                    let target = decision.target.expect("undropped decision has a target");
                    if target == self.tasks[idx].origin {
                        self.enqueue(idx, target);
                    } else {
                        let dt = self.net.sample_transfer_s(
                            false,
                            ttype.input_kb,
                            &mut self.transfer_rng,
                        );
                        self.start_transfer(idx, target, dt);
                    }
                }
            }
        }
    }

    fn start_transfer(&mut self, idx: usize, dest: usize, dt: f64) {
        self.tasks[idx].state = TaskState::Transferring;
        self.transfer_started[idx] = self.clock;
        self.queue.schedule(
            self.clock + dt,
            EventKind::TransferComplete(idx as TaskId, dest),
        );
    }

    fn handle_transfer_complete(&mut self, task_id: TaskId, dest: usize) {
        let idx = task_id as usize;
        debug_assert_eq!(self.tasks[idx].state, TaskState::Transferring);
        let elapsed = self.clock - self.transfer_started[idx];
        self.ett
            .record_transfer(self.tasks[idx].origin, dest, elapsed);
        self.enqueue(idx, dest);
    }

    /// Work-conserving FCFS: a free core starts the task immediately,
    /// otherwise it waits in the node's FIFO.
    fn enqueue(&mut self, idx: usize, slot: usize) {
        self.arrived_at_node[idx] = self.clock;
        if self.nodes[slot].busy_cores < self.nodes[slot].cores {
            self.start_exec(idx, slot);
        } else {
            self.tasks[idx].state = TaskState::Queued;
            self.nodes[slot].fifo.push_back(idx as TaskId);
        }
    }

    fn start_exec(&mut self, idx: usize, slot: usize) {
        debug_assert!(self.nodes[slot].busy_cores < self.nodes[slot].cores);
        self.nodes[slot].busy_cores += 1;
        self.tasks[idx].state = TaskState::Executing;
        let exec = self.tasks[idx].length_mi / self.nodes[slot].mips;
        self.queue.schedule(
            self.clock + exec,
            EventKind::ExecComplete(idx as TaskId, slot),
        );
    }

    fn handle_exec_complete(&mut self, task_id: TaskId, slot: usize) {
        let idx = task_id as usize;
        debug_assert_eq!(self.tasks[idx].state, TaskState::Executing);
        self.nodes[slot].busy_cores -= 1;
        self.tasks[idx].state = TaskState::Completed;
        self.fates[idx] = Some(TaskFate::Completed {
            node_slot: slot,
            completion: self.clock,
        });
        let sojourn = self.clock - self.arrived_at_node[idx];
        self.etc
            .record_completion(self.tasks[idx].type_id, slot, sojourn);
        self.metrics
            .record_outcome(&self.tasks[idx], Outcome::Completed(self.clock), Some(slot));
        self.unfinished -= 1;

        if let Some(next) = self.nodes[slot].fifo.pop_front() {
            self.start_exec(next as usize, slot);
        }
    }

    /// Publishes both matrices and reschedules itself while any task is
    /// still in flight.
    fn handle_matrix_refresh(&mut self) {
        self.etc.refresh();
        self.ett.refresh();
        if self.unfinished > 0 {
            self.queue.schedule(
                self.clock + self.cfg.estimator.refresh_period_s,
                EventKind::MatrixRefresh,
            );
        }
    }

    fn finish(mut self) -> SimOutcome {
        assert_eq!(self.unfinished, 0, "event queue drained with open tasks");
        if let Some(trace) = self.trace.as_mut() {
            Self::write_trace_line(trace, self.cloud_slot, self.clock, "end_of_run", None, None);
        }
        let fates: Vec<TaskFate> = self
            .fates
            .into_iter()
            .map(|f| f.expect("terminal task"))
            .collect();
        SimOutcome {
            report: self.metrics.finalize(),
            tasks: self.tasks,
            fates,
            trace: self.trace,
            matrices: MatrixDump {
                etc: self.etc.dump(),
                ett: self.ett.dump(),
            },
        }
    }
}
