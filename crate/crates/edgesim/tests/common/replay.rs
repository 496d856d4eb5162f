//! Micro-scenario replayer: recomputes a small run's outcome from first
//! principles, with no event queue.
//!
//! Scenarios are built so every allocation decision is a step function of
//! the zero-variance priors (jitters zero, prior spreads zero, refresh
//! pushed past the end of time), which makes targets, transfers, and the
//! FCFS core assignment hand-computable. The replayer implements its own
//! static allocator and FCFS recurrence and must agree with the engine
//! exactly, task by task.

use edgesim::config::{CloudSpec, NodeSpec, SimulationConfig};
use edgesim::engine::{simulate_tasks, RunOptions, TaskFate};
use edgesim::heuristics::Heuristic;
use edgesim::taskmodel::{Task, Urgency};

pub struct MicroScenario {
    pub name: &'static str,
    pub cfg: SimulationConfig,
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplayFate {
    Completed { node_slot: usize, completion: f64 },
    Dropped,
}

/// Zero-variance scenario base: explicit nodes, no jitter, refresh far past
/// the end of the run, degenerate priors.
pub fn micro_config(heuristic: Heuristic, nodes: &[(f64, u32)]) -> SimulationConfig {
    let mut cfg = SimulationConfig::paper_default();
    cfg.heuristic = heuristic;
    cfg.nodes = nodes
        .iter()
        .enumerate()
        .map(|(id, &(mips, cores))| NodeSpec { id, mips, cores })
        .collect();
    cfg.network.wlan_jitter_stddev_s = 0.0;
    cfg.network.sat_jitter_stddev_s = 0.0;
    cfg.estimator.refresh_period_s = 1e6;
    cfg.estimator.etc_prior_stddev_factor = 0.0;
    cfg.estimator.ett_prior_stddev_frac = 0.0;
    cfg
}

/// Deterministic transfer used by both the scenarios' arithmetic and the
/// replayer; mirrors the engine's transfer law with zero jitter.
fn det_transfer(cfg: &SimulationConfig, to_cloud: bool, size_kb: f64) -> f64 {
    let bits = size_kb * 8000.0;
    let t = if to_cloud {
        cfg.network.sat_propagation_s + bits / (cfg.network.sat_bandwidth_mbps * 1e6)
    } else {
        bits / (cfg.network.wlan_bandwidth_mbps * 1e6)
    };
    t.max(cfg.network.min_transfer_s)
}

/// Simulation-free recomputation of every task's fate.
pub fn replay(sc: &MicroScenario) -> Vec<ReplayFate> {
    let cfg = &sc.cfg;
    let n_edges = cfg.nodes.len();
    let cloud = n_edges;
    let mut mips: Vec<f64> = cfg.nodes.iter().map(|n| n.mips).collect();
    mips.push(cfg.cloud.mips);
    let mut cores: Vec<u32> = cfg.nodes.iter().map(|n| n.cores).collect();
    cores.push(cfg.cloud.cores);

    // static priors (stddev zero by construction)
    let etc_mean = |type_id: usize, slot: usize| -> f64 {
        cfg.estimator.etc_prior_mean_factor * cfg.task_types[type_id].length_dist.mean / mips[slot]
    };
    let mean_input =
        cfg.task_types.iter().map(|t| t.input_kb).sum::<f64>() / cfg.task_types.len() as f64;
    let ett_mean = |src: usize, dst: usize| -> f64 {
        if src == dst {
            0.0
        } else {
            det_transfer(cfg, src == cloud || dst == cloud, mean_input)
        }
    };

    // phase 1: immediate-mode decisions at arrival, priors only
    struct Entry {
        task_idx: usize,
        slot: usize,
        time: f64,
        remote: bool,
    }
    let mut entries: Vec<Entry> = Vec::new();
    let mut fates: Vec<Option<ReplayFate>> = vec![None; sc.tasks.len()];

    for (idx, task) in sc.tasks.iter().enumerate() {
        let ttype = &cfg.task_types[task.type_id];
        if ttype.urgency == Urgency::Tolerant {
            entries.push(Entry {
                task_idx: idx,
                slot: cloud,
                time: task.arrival_time + det_transfer(cfg, true, ttype.input_kb),
                remote: true,
            });
            continue;
        }
        let budget = task.deadline - task.arrival_time;
        let origin = task.origin;
        // candidates in tie-break order: receiving first, then ascending id
        let order: Vec<usize> = std::iter::once(origin)
            .chain((0..n_edges).filter(|&j| j != origin))
            .collect();
        let target: Option<usize> = match cfg.heuristic {
            Heuristic::Hps => {
                let mut best: Option<(usize, f64)> = None;
                for &j in &order {
                    let total = if j == origin { 0.0 } else { ett_mean(origin, j) }
                        + etc_mean(task.type_id, j);
                    let p = if budget >= total { 1.0 } else { 0.0 };
                    if best.map_or(true, |(_, bp)| p > bp) {
                        best = Some((j, p));
                    }
                }
                Some(best.unwrap().0)
            }
            Heuristic::Mect => {
                let mut best: Option<(usize, f64)> = None;
                for &j in &order {
                    let m = etc_mean(task.type_id, j);
                    if best.map_or(true, |(_, bm)| m < bm) {
                        best = Some((j, m));
                    }
                }
                Some(best.unwrap().0)
            }
            Heuristic::Scc => {
                let mut best: Option<(usize, f64)> = None;
                for &j in &order {
                    let slack = budget - etc_mean(task.type_id, j);
                    if best.map_or(true, |(_, bs)| slack > bs) {
                        best = Some((j, slack));
                    }
                }
                let (j, slack) = best.unwrap();
                if slack <= 0.0 {
                    None
                } else {
                    Some(j)
                }
            }
        };
        match target {
            None => fates[idx] = Some(ReplayFate::Dropped),
            Some(j) if j == origin => entries.push(Entry {
                task_idx: idx,
                slot: j,
                time: task.arrival_time,
                remote: false,
            }),
            Some(j) => entries.push(Entry {
                task_idx: idx,
                slot: j,
                time: task.arrival_time + det_transfer(cfg, false, ttype.input_kb),
                remote: true,
            }),
        }
    }

    // phase 2: FCFS with one core per task. Queue-entry order matches the
    // engine's (time, insertion-seq) dispatch order: local enqueues happen
    // inside arrival events (scheduled first, in task order), transfers are
    // scheduled later in sender-arrival order.
    entries.sort_by(|a, b| {
        a.time
            .partial_cmp(&b.time)
            .unwrap()
            .then(a.remote.cmp(&b.remote))
            .then(a.task_idx.cmp(&b.task_idx))
    });
    let mut core_free: Vec<Vec<f64>> = cores.iter().map(|&c| vec![0.0; c as usize]).collect();
    for e in &entries {
        let avail = core_free[e.slot]
            .iter()
            .cloned()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .unwrap();
        let start = e.time.max(avail.1);
        let completion = start + sc.tasks[e.task_idx].length_mi / mips[e.slot];
        core_free[e.slot][avail.0] = completion;
        fates[e.task_idx] = Some(ReplayFate::Completed {
            node_slot: e.slot,
            completion,
        });
    }
    fates.into_iter().map(|f| f.unwrap()).collect()
}

/// Runs the scenario through the engine and asserts exact agreement with the
/// replayer: per-task fate, completion times to the bit, and miss totals.
pub fn assert_replay_matches(sc: &MicroScenario) {
    let expected = replay(sc);
    let out = simulate_tasks(&sc.cfg, sc.tasks.clone(), 7, &RunOptions::default())
        .unwrap_or_else(|e| panic!("scenario {}: {e}", sc.name));
    assert_eq!(expected.len(), out.fates.len());
    for (i, (exp, got)) in expected.iter().zip(out.fates.iter()).enumerate() {
        match (exp, got) {
            (ReplayFate::Dropped, TaskFate::Dropped) => {}
            (
                ReplayFate::Completed { node_slot, completion },
                TaskFate::Completed {
                    node_slot: got_slot,
                    completion: got_completion,
                },
            ) => {
                assert_eq!(
                    node_slot, got_slot,
                    "scenario {}: task {i} allocated to slot {got_slot}, replay says {node_slot}",
                    sc.name
                );
                assert_eq!(
                    completion, got_completion,
                    "scenario {}: task {i} completion {got_completion}, replay says {completion}",
                    sc.name
                );
            }
            (exp, got) => panic!("scenario {}: task {i} fate {got:?}, replay says {exp:?}", sc.name),
        }
    }
    let expected_misses = expected
        .iter()
        .zip(sc.tasks.iter())
        .filter(|(f, t)| match f {
            ReplayFate::Dropped => true,
            ReplayFate::Completed { completion, .. } => *completion > t.deadline,
        })
        .count() as u64;
    assert_eq!(
        expected_misses, out.report.misses_total,
        "scenario {}: miss totals disagree",
        sc.name
    );
}

fn task(id: u64, type_id: usize, origin: usize, arrival: f64, length: f64, deadline: f64) -> Task {
    Task::new(id, type_id, origin, arrival, length, deadline)
}

/// The curated scenario set: FCFS serialization, multi-core spillover,
/// tie-breaks, SCC drops, HPS-vs-MECT divergence under a slow link, the
/// cloud path, and deadline boundaries.
pub fn scenarios() -> Vec<MicroScenario> {
    let mut all = Vec::new();

    all.push(MicroScenario {
        name: "single_task_closed_form",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 1)]),
        tasks: vec![task(0, 0, 0, 1.0, 2000.0, 10.0)],
    });

    all.push(MicroScenario {
        name: "fcfs_one_core_serialization",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 1)]),
        tasks: (0..3).map(|i| task(i, 0, 0, 1.0, 1000.0, 100.0)).collect(),
    });

    all.push(MicroScenario {
        name: "eight_cores_ninth_queues",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 8)]),
        tasks: (0..9).map(|i| task(i, 0, 0, 2.0, 1000.0, 100.0)).collect(),
    });

    all.push(MicroScenario {
        name: "staggered_arrivals_queue_drain",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 1)]),
        tasks: vec![
            task(0, 0, 0, 0.5, 1000.0, 100.0),
            task(1, 0, 0, 0.7, 1000.0, 100.0),
            task(2, 0, 0, 3.5, 1000.0, 100.0),
        ],
    });

    // two nodes: node 1 computes faster (prior 1.4286 vs 1.5) but sits
    // behind a link whose prior pushes the convolved step past the budget
    // (1.4286 + 0.085 = 1.5136 > 1.505 > 1.5). HPS keeps the task local;
    // MECT chases the smaller completion mean across the link.
    let slow_link_cfg = |h: Heuristic| {
        let mut cfg = micro_config(h, &[(2000.0, 1), (2100.0, 1)]);
        cfg.task_types[0].input_kb = 5000.0;
        cfg
    };
    all.push(MicroScenario {
        name: "hps_keeps_local_under_slow_link",
        cfg: slow_link_cfg(Heuristic::Hps),
        tasks: vec![task(0, 0, 0, 0.0, 1500.0, 1.505)],
    });
    all.push(MicroScenario {
        name: "mect_chases_fast_remote",
        cfg: slow_link_cfg(Heuristic::Mect),
        tasks: vec![task(0, 0, 0, 0.0, 1500.0, 1.505)],
    });

    all.push(MicroScenario {
        name: "hps_probability_tie_stays_local",
        cfg: micro_config(Heuristic::Hps, &[(2000.0, 1), (2000.0, 1), (2000.0, 1)]),
        tasks: vec![task(0, 0, 1, 0.0, 1500.0, 20.0)],
    });

    all.push(MicroScenario {
        name: "mect_tie_breaks_to_lowest_id",
        cfg: micro_config(Heuristic::Mect, &[(1000.0, 1), (2000.0, 1), (2000.0, 1)]),
        tasks: vec![task(0, 0, 0, 0.0, 1500.0, 20.0)],
    });

    all.push(MicroScenario {
        name: "scc_drops_hopeless_task",
        cfg: micro_config(Heuristic::Scc, &[(1000.0, 1)]),
        tasks: vec![task(0, 1, 0, 1.0, 3000.0, 4.0)],
    });

    all.push(MicroScenario {
        name: "scc_allocates_max_slack",
        cfg: micro_config(Heuristic::Scc, &[(1000.0, 1), (2000.0, 1)]),
        tasks: vec![task(0, 0, 0, 0.0, 1400.0, 2.0)],
    });

    all.push(MicroScenario {
        name: "tolerant_takes_satellite_to_cloud",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 1)]),
        tasks: vec![task(0, 2, 0, 1.0, 6000.0, 50.0)],
    });

    {
        let mut cfg = micro_config(Heuristic::Hps, &[(1000.0, 1)]);
        cfg.cloud = CloudSpec {
            mips: 10000.0,
            cores: 2,
        };
        all.push(MicroScenario {
            name: "cloud_fifo_queues_tolerant_burst",
            cfg,
            tasks: (0..5).map(|i| task(i, 2, 0, 1.0, 5000.0, 100.0)).collect(),
        });
    }

    all.push(MicroScenario {
        name: "deadline_boundary_exact_hit_and_near_miss",
        cfg: micro_config(Heuristic::Hps, &[(1000.0, 1)]),
        tasks: vec![
            task(0, 0, 0, 1.0, 1000.0, 2.0),   // completes exactly at 2.0: hit
            task(1, 0, 0, 5.0, 1000.0, 5.999), // completes at 6.0: miss
        ],
    });

    all.push(MicroScenario {
        name: "mixed_load_two_nodes_hps",
        cfg: micro_config(Heuristic::Hps, &[(2000.0, 2), (1600.0, 2)]),
        tasks: vec![
            task(0, 0, 0, 0.0, 1500.0, 2.0),
            task(1, 1, 1, 0.1, 3000.0, 4.1),
            task(2, 0, 1, 0.2, 1600.0, 2.2),
            task(3, 0, 0, 0.25, 1400.0, 2.25),
            task(4, 1, 0, 0.3, 2900.0, 4.3),
            task(5, 0, 1, 1.4, 1500.0, 3.4),
            task(6, 2, 0, 1.5, 6000.0, 60.0),
            task(7, 0, 0, 1.6, 1500.0, 3.6),
        ],
    });

    all.push(MicroScenario {
        name: "mixed_load_two_nodes_scc",
        cfg: micro_config(Heuristic::Scc, &[(2000.0, 2), (1600.0, 2)]),
        tasks: vec![
            task(0, 0, 0, 0.0, 1500.0, 2.0),
            task(1, 1, 1, 0.1, 3000.0, 2.2), // slack negative everywhere: dropped
            task(2, 0, 1, 0.2, 1600.0, 2.5),
            task(3, 0, 0, 0.25, 1400.0, 2.3),
            task(4, 1, 0, 0.3, 2900.0, 4.3),
        ],
    });

    all
}
