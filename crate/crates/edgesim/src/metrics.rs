//! Per-run accounting and sweep aggregation.
//!
//! Deadline miss rate is the single quality rubric: a task misses when it
//! completes after its deadline or is dropped by SCC. Completion exactly at
//! the deadline counts as a hit. Dropped tasks are misses, never a separate
//! success category.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::taskmodel::{SimTime, Task, TaskType, Urgency};

/// Terminal fate of one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed(SimTime),
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub type_id: usize,
    pub count: u64,
    pub misses: u64,
    pub miss_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    /// Edge node id, or "cloud".
    pub node: String,
    pub executed: u64,
    pub misses: u64,
}

/// Finalized metrics for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub heuristic: String,
    pub num_applications: u32,
    pub seed: u64,
    pub tasks_total: u64,
    pub tasks_completed: u64,
    pub tasks_dropped: u64,
    pub misses_total: u64,
    pub miss_rate: f64,
    pub miss_rate_urgent: f64,
    pub miss_rate_tolerant: f64,
    pub mean_completion_urgent_s: f64,
    pub mean_completion_tolerant_s: f64,
    pub per_type: Vec<TypeStats>,
    pub per_node: Vec<NodeStats>,
}

impl RunReport {
    pub const CSV_HEADER: &'static str = "heuristic,num_apps,seed,tasks_total,misses,dropped,miss_rate,miss_rate_urgent,miss_rate_tolerant,mean_completion_urgent_s,mean_completion_tolerant_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.heuristic,
            self.num_applications,
            self.seed,
            self.tasks_total,
            self.misses_total,
            self.tasks_dropped,
            self.miss_rate,
            self.miss_rate_urgent,
            self.miss_rate_tolerant,
            self.mean_completion_urgent_s,
            self.mean_completion_tolerant_s,
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    count: u64,
    misses: u64,
    completed: u64,
    completion_sum: f64,
}

impl Tally {
    fn miss_rate(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.misses as f64 / self.count as f64
        }
    }

    fn mean_completion(&self) -> f64 {
        if self.completed == 0 {
            0.0
        } else {
            self.completion_sum / self.completed as f64
        }
    }
}

/// Accumulates task outcomes for one run; single-owner, single-threaded.
#[derive(Debug)]
pub struct MetricsCollector {
    heuristic: String,
    num_applications: u32,
    seed: u64,
    urgency_of: Vec<Urgency>,
    recorded: Vec<bool>,
    dropped: u64,
    overall: Tally,
    urgent: Tally,
    tolerant: Tally,
    per_type: Vec<Tally>,
    per_node: Vec<(u64, u64)>, // (executed, misses), cloud last
}

impl MetricsCollector {
    /// `num_nodes` counts edge nodes only; the cloud is tracked as one extra
    /// slot at the end.
    pub fn new(
        heuristic: &str,
        num_applications: u32,
        seed: u64,
        types: &[TaskType],
        num_nodes: usize,
        num_tasks: usize,
    ) -> Self {
        MetricsCollector {
            heuristic: heuristic.to_string(),
            num_applications,
            seed,
            urgency_of: types.iter().map(|t| t.urgency).collect(),
            recorded: vec![false; num_tasks],
            dropped: 0,
            overall: Tally::default(),
            urgent: Tally::default(),
            tolerant: Tally::default(),
            per_type: vec![Tally::default(); types.len()],
            per_node: vec![(0, 0); num_nodes + 1],
        }
    }

    /// Records a terminal task. A task id may be recorded once; recording it
    /// again is an engine bug and panics. `executed_on` is the node slot for
    /// completed tasks (edge index, or `num_nodes` for the cloud).
    pub fn record_outcome(&mut self, task: &Task, outcome: Outcome, executed_on: Option<usize>) {
        let idx = task.id as usize;
        assert!(
            !self.recorded[idx],
            "task {} recorded twice in metrics",
            task.id
        );
        self.recorded[idx] = true;

        let (miss, completion) = match outcome {
            Outcome::Completed(t) => (t > task.deadline, Some(t - task.arrival_time)),
            Outcome::Dropped => {
                self.dropped += 1;
                (true, None)
            }
        };

        let urgency = self.urgency_of[task.type_id];
        for tally in [
            &mut self.overall,
            match urgency {
                Urgency::Urgent => &mut self.urgent,
                Urgency::Tolerant => &mut self.tolerant,
            },
            &mut self.per_type[task.type_id],
        ] {
            tally.count += 1;
            if miss {
                tally.misses += 1;
            }
            if let Some(c) = completion {
                tally.completed += 1;
                tally.completion_sum += c;
            }
        }

        match (outcome, executed_on) {
            (Outcome::Completed(_), Some(node)) => {
                let slot = &mut self.per_node[node];
                slot.0 += 1;
                if miss {
                    slot.1 += 1;
                }
            }
            (Outcome::Completed(_), None) => panic!("completed task without a node"),
            (Outcome::Dropped, _) => {}
        }
    }

    /// Finalizes the report, asserting the conservation invariants: every
    /// task terminal, totals consistent, per-type counts summing to the
    /// total.
    pub fn finalize(self) -> RunReport {
        assert!(
            self.recorded.iter().all(|&r| r),
            "finalize with unrecorded tasks"
        );
        let total = self.overall.count;
        assert_eq!(total as usize, self.recorded.len());
        let completed = self.overall.completed;
        assert_eq!(
            total,
            completed + self.dropped,
            "conservation: total != completed + dropped"
        );
        let per_type_sum: u64 = self.per_type.iter().map(|t| t.count).sum();
        assert_eq!(per_type_sum, total, "per-type counts must sum to total");

        let num_edge = self.per_node.len() - 1;
        let per_node = self
            .per_node
            .iter()
            .enumerate()
            .map(|(i, &(executed, misses))| NodeStats {
                node: if i == num_edge {
                    "cloud".to_string()
                } else {
                    i.to_string()
                },
                executed,
                misses,
            })
            .collect();

        RunReport {
            heuristic: self.heuristic,
            num_applications: self.num_applications,
            seed: self.seed,
            tasks_total: total,
            tasks_completed: completed,
            tasks_dropped: self.dropped,
            misses_total: self.overall.misses,
            miss_rate: self.overall.miss_rate(),
            miss_rate_urgent: self.urgent.miss_rate(),
            miss_rate_tolerant: self.tolerant.miss_rate(),
            mean_completion_urgent_s: self.urgent.mean_completion(),
            mean_completion_tolerant_s: self.tolerant.mean_completion(),
            per_type: self
                .per_type
                .iter()
                .enumerate()
                .map(|(i, t)| TypeStats {
                    type_id: i,
                    count: t.count,
                    misses: t.misses,
                    miss_rate: t.miss_rate(),
                })
                .collect(),
            per_node,
        }
    }
}

/// One row of the sweep table: miss-rate mean and sample stddev over the
/// replications of a (heuristic, load) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub heuristic: String,
    pub num_apps: u32,
    pub replications: u64,
    pub miss_rate_mean: f64,
    pub miss_rate_stddev: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str =
        "heuristic,num_apps,replications,miss_rate_mean,miss_rate_stddev";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6}",
            self.heuristic, self.num_apps, self.replications, self.miss_rate_mean, self.miss_rate_stddev,
        )
    }
}

/// Groups reports by (heuristic, num_applications) and emits the mean and
/// sample stddev of the miss rate over seeds, sorted by (heuristic,
/// num_applications).
pub fn aggregate_sweep(reports: &[RunReport]) -> Vec<SweepRow> {
    let mut groups: BTreeMap<(String, u32), Vec<f64>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((r.heuristic.clone(), r.num_applications))
            .or_default()
            .push(r.miss_rate);
    }
    groups
        .into_iter()
        .map(|((heuristic, num_apps), rates)| {
            let n = rates.len() as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let stddev = if rates.len() < 2 {
                0.0
            } else {
                (rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            SweepRow {
                heuristic,
                num_apps,
                replications: rates.len() as u64,
                miss_rate_mean: mean,
                miss_rate_stddev: stddev,
            }
        })
        .collect()
}

pub fn run_reports_csv(reports: &[RunReport]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", RunReport::CSV_HEADER).unwrap();
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", SweepRow::CSV_HEADER).unwrap();
    for r in rows {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::default_task_types;

    fn collector(num_tasks: usize) -> MetricsCollector {
        MetricsCollector::new("hps", 1, 0, &default_task_types(), 2, num_tasks)
    }

    fn task(id: u64, type_id: usize, deadline: f64) -> Task {
        Task::new(id, type_id, 0, 0.0, 100.0, deadline)
    }

    #[test]
    fn completion_at_deadline_is_hit() {
        let mut m = collector(1);
        m.record_outcome(&task(0, 0, 5.0), Outcome::Completed(5.0), Some(0));
        let r = m.finalize();
        assert_eq!(r.misses_total, 0);
        assert_eq!(r.tasks_completed, 1);
    }

    #[test]
    fn late_completion_is_miss() {
        let mut m = collector(1);
        m.record_outcome(&task(0, 0, 5.0), Outcome::Completed(5.001), Some(0));
        let r = m.finalize();
        assert_eq!(r.misses_total, 1);
    }

    #[test]
    fn dropped_is_miss_and_counted() {
        let mut m = collector(1);
        m.record_outcome(&task(0, 0, 5.0), Outcome::Dropped, None);
        let r = m.finalize();
        assert_eq!(r.tasks_dropped, 1);
        assert_eq!(r.misses_total, 1);
        assert_eq!(r.tasks_completed, 0);
        assert_eq!(r.miss_rate, 1.0);
    }

    #[test]
    fn miss_rate_three_of_ten() {
        let mut m = collector(10);
        for i in 0..10u64 {
            let late = i < 3;
            let t = task(i, 0, 5.0);
            let completion = if late { 6.0 } else { 4.0 };
            m.record_outcome(&t, Outcome::Completed(completion), Some(0));
        }
        let r = m.finalize();
        assert!((r.miss_rate - 0.3).abs() < 1e-12);
    }

    #[test]
    fn per_urgency_split() {
        let mut m = collector(2);
        m.record_outcome(&task(0, 0, 5.0), Outcome::Completed(6.0), Some(0)); // urgent miss
        m.record_outcome(&task(1, 2, 50.0), Outcome::Completed(10.0), Some(2)); // tolerant hit on cloud
        let r = m.finalize();
        assert_eq!(r.miss_rate_urgent, 1.0);
        assert_eq!(r.miss_rate_tolerant, 0.0);
        assert!((r.mean_completion_urgent_s - 6.0).abs() < 1e-12);
        assert!((r.mean_completion_tolerant_s - 10.0).abs() < 1e-12);
        assert_eq!(r.per_node[2].node, "cloud");
        assert_eq!(r.per_node[2].executed, 1);
    }

    #[test]
    #[should_panic(expected = "recorded twice")]
    fn double_record_panics() {
        let mut m = collector(1);
        let t = task(0, 0, 5.0);
        m.record_outcome(&t, Outcome::Completed(1.0), Some(0));
        m.record_outcome(&t, Outcome::Completed(1.0), Some(0));
    }

    fn report(heuristic: &str, apps: u32, seed: u64, miss_rate: f64) -> RunReport {
        RunReport {
            heuristic: heuristic.into(),
            num_applications: apps,
            seed,
            tasks_total: 100,
            tasks_completed: 100,
            tasks_dropped: 0,
            misses_total: (miss_rate * 100.0) as u64,
            miss_rate,
            miss_rate_urgent: 0.0,
            miss_rate_tolerant: 0.0,
            mean_completion_urgent_s: 0.0,
            mean_completion_tolerant_s: 0.0,
            per_type: vec![],
            per_node: vec![],
        }
    }

    #[test]
    fn aggregate_single_report() {
        let rows = aggregate_sweep(&[report("hps", 50, 1, 0.25)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].replications, 1);
        assert!((rows[0].miss_rate_mean - 0.25).abs() < 1e-12);
        assert_eq!(rows[0].miss_rate_stddev, 0.0);
    }

    #[test]
    fn aggregate_two_seeds() {
        let rows = aggregate_sweep(&[report("hps", 50, 1, 0.2), report("hps", 50, 2, 0.4)]);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].miss_rate_mean - 0.3).abs() < 1e-12);
        assert!((rows[0].miss_rate_stddev - 0.14142135623730948).abs() < 1e-12);
    }

    #[test]
    fn aggregate_grid_shape_and_order() {
        let mut reports = Vec::new();
        for h in ["scc", "hps", "mect"] {
            for apps in [250u32, 50, 150, 100, 200] {
                for seed in 0..10u64 {
                    reports.push(report(h, apps, seed, 0.1));
                }
            }
        }
        let rows = aggregate_sweep(&reports);
        assert_eq!(rows.len(), 15);
        let keys: Vec<(String, u32)> = rows
            .iter()
            .map(|r| (r.heuristic.clone(), r.num_apps))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "rows must be sorted by (heuristic, apps)");
        assert!(rows.iter().all(|r| r.replications == 10));
    }

    #[test]
    fn aggregate_permutation_invariant() {
        let mut reports = vec![
            report("hps", 50, 1, 0.1),
            report("mect", 50, 1, 0.3),
            report("hps", 100, 2, 0.2),
        ];
        let a = aggregate_sweep(&reports);
        reports.reverse();
        let b = aggregate_sweep(&reports);
        assert_eq!(a, b);
    }

    #[test]
    fn csv_shapes() {
        let r = report("hps", 50, 1, 0.25);
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), RunReport::CSV_HEADER.split(',').count());
        assert!(row.starts_with("hps,50,1,100,25,0,0.250000,"));
        let s = SweepRow {
            heuristic: "mect".into(),
            num_apps: 100,
            replications: 10,
            miss_rate_mean: 0.125,
            miss_rate_stddev: 0.01,
        };
        assert_eq!(s.csv_row(), "mect,100,10,0.125000,0.010000");
    }
}
