//! The ETC and ETT matrices: per-(task type, node) completion-time and
//! per-(node, node) transfer-time distributions, re-estimated periodically
//! from observed history.
//!
//! Each cell pairs a *published* [`NormalDist`] — the value the heuristics
//! see — with a sliding window of raw observations. Observations accumulate
//! silently between refreshes; only [`EtcMatrix::refresh`]/
//! [`EttMatrix::refresh`] moves window statistics into the published cell,
//! so every allocation decision between two refresh instants sees identical
//! estimates. A cell that never receives observations keeps its prior; a
//! cell whose window stops growing keeps its last published value.
//!
//! ETC cells hold node *sojourn* time (queue wait plus execution, transfer
//! excluded), which makes the estimate congestion-aware.

use std::collections::VecDeque;

use serde::Serialize;

use crate::stats::{NormalDist, OnlineStat};
use crate::taskmodel::{NodeId, TypeId};

/// Sliding window of the last `capacity` observations for one matrix cell.
#[derive(Debug, Clone)]
struct WindowAcc {
    window: VecDeque<f64>,
    capacity: usize,
}

impl WindowAcc {
    fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be >= 1");
        WindowAcc {
            window: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn push(&mut self, x: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(x);
    }

    fn stat(&self) -> OnlineStat {
        let mut acc = OnlineStat::new();
        for &x in &self.window {
            acc.update(x);
        }
        acc
    }
}

/// Published value for one cell given its window and prior: two or more
/// observations publish the window statistics, a single observation keeps
/// the prior's spread, and an empty window leaves the cell untouched.
fn published_from_window(acc: &WindowAcc, prior_stddev: f64, current: NormalDist) -> NormalDist {
    let stat = acc.stat();
    match stat.count() {
        0 => current,
        1 => NormalDist::new(stat.mean(), prior_stddev),
        _ => stat.to_dist(),
    }
}

/// One cell of a matrix dump: published distribution plus window depth.
#[derive(Debug, Clone, Serialize)]
pub struct CellDump {
    pub row: usize,
    pub col: usize,
    pub mean: f64,
    pub stddev: f64,
    pub count: u64,
}

/// Estimated Task Completion time matrix: (task type × node) → NormalDist of
/// node sojourn time in seconds.
#[derive(Debug, Clone)]
pub struct EtcMatrix {
    priors: Vec<Vec<NormalDist>>,
    published: Vec<Vec<NormalDist>>,
    accs: Vec<Vec<WindowAcc>>,
}

impl EtcMatrix {
    /// `priors[type][node]` seeds every published cell before any data
    /// arrives.
    pub fn from_priors(priors: Vec<Vec<NormalDist>>, window: usize) -> Self {
        assert!(!priors.is_empty(), "ETC matrix needs at least one task type");
        let nodes = priors[0].len();
        assert!(nodes >= 1, "ETC matrix needs at least one node");
        assert!(
            priors.iter().all(|row| row.len() == nodes),
            "ragged ETC prior grid"
        );
        let accs = priors
            .iter()
            .map(|row| row.iter().map(|_| WindowAcc::new(window)).collect())
            .collect();
        EtcMatrix {
            published: priors.clone(),
            priors,
            accs,
        }
    }

    pub fn num_types(&self) -> usize {
        self.priors.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.priors[0].len()
    }

    /// Feeds one observed sojourn into the (type, node) window. The
    /// published cell does not change until the next refresh.
    pub fn record_completion(&mut self, ttype: TypeId, node: NodeId, sojourn: f64) {
        assert!(
            ttype < self.num_types() && node < self.num_nodes(),
            "ETC record outside matrix: type {ttype}, node {node}"
        );
        assert!(sojourn > 0.0, "non-positive sojourn {sojourn}");
        self.accs[ttype][node].push(sojourn);
    }

    /// Publishes window statistics into every cell.
    pub fn refresh(&mut self) {
        for t in 0..self.num_types() {
            for n in 0..self.num_nodes() {
                self.published[t][n] = published_from_window(
                    &self.accs[t][n],
                    self.priors[t][n].stddev,
                    self.published[t][n],
                );
            }
        }
    }

    /// Currently published distribution (never the in-progress window).
    pub fn dist(&self, ttype: TypeId, node: NodeId) -> NormalDist {
        assert!(
            ttype < self.num_types() && node < self.num_nodes(),
            "ETC lookup outside matrix: type {ttype}, node {node}"
        );
        self.published[ttype][node]
    }

    pub fn dump(&self) -> Vec<CellDump> {
        let mut cells = Vec::new();
        for t in 0..self.num_types() {
            for n in 0..self.num_nodes() {
                let d = self.published[t][n];
                cells.push(CellDump {
                    row: t,
                    col: n,
                    mean: d.mean,
                    stddev: d.stddev,
                    count: self.accs[t][n].stat().count(),
                });
            }
        }
        cells
    }
}

/// Estimated Task Transfer time matrix: (source node × destination node) →
/// NormalDist of transfer time in seconds. The diagonal is pinned at
/// N(0, 0): there is no transfer to self.
#[derive(Debug, Clone)]
pub struct EttMatrix {
    priors: Vec<Vec<NormalDist>>,
    published: Vec<Vec<NormalDist>>,
    accs: Vec<Vec<WindowAcc>>,
}

impl EttMatrix {
    /// `priors[src][dst]` seeds the off-diagonal cells; diagonal entries are
    /// forced to N(0, 0) regardless of the input.
    pub fn from_priors(priors: Vec<Vec<NormalDist>>, window: usize) -> Self {
        let n = priors.len();
        assert!(n >= 1, "ETT matrix needs at least one node");
        assert!(
            priors.iter().all(|row| row.len() == n),
            "ETT prior grid must be square"
        );
        let mut priors = priors;
        for (i, row) in priors.iter_mut().enumerate() {
            row[i] = NormalDist::zero();
        }
        let accs = priors
            .iter()
            .map(|row| row.iter().map(|_| WindowAcc::new(window)).collect())
            .collect();
        EttMatrix {
            published: priors.clone(),
            priors,
            accs,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.priors.len()
    }

    /// Feeds one observed transfer into the (src, dst) window.
    pub fn record_transfer(&mut self, src: NodeId, dst: NodeId, elapsed: f64) {
        assert!(
            src < self.num_nodes() && dst < self.num_nodes(),
            "ETT record outside matrix: {src} -> {dst}"
        );
        assert!(src != dst, "transfer to self recorded for node {src}");
        assert!(elapsed >= 0.0, "negative transfer time {elapsed}");
        self.accs[src][dst].push(elapsed);
    }

    pub fn refresh(&mut self) {
        for s in 0..self.num_nodes() {
            for d in 0..self.num_nodes() {
                if s == d {
                    continue;
                }
                self.published[s][d] = published_from_window(
                    &self.accs[s][d],
                    self.priors[s][d].stddev,
                    self.published[s][d],
                );
            }
        }
    }

    pub fn dist(&self, src: NodeId, dst: NodeId) -> NormalDist {
        assert!(
            src < self.num_nodes() && dst < self.num_nodes(),
            "ETT lookup outside matrix: {src} -> {dst}"
        );
        self.published[src][dst]
    }

    pub fn dump(&self) -> Vec<CellDump> {
        let mut cells = Vec::new();
        for s in 0..self.num_nodes() {
            for d in 0..self.num_nodes() {
                let dist = self.published[s][d];
                cells.push(CellDump {
                    row: s,
                    col: d,
                    mean: dist.mean,
                    stddev: dist.stddev,
                    count: self.accs[s][d].stat().count(),
                });
            }
        }
        cells
    }
}
