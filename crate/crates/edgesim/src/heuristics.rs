//! Immediate-mode allocation policies used by the service balancer.
//!
//! Urgent tasks are placed on an edge node by one of three heuristics;
//! tolerant tasks always go to the cloud. For a remote candidate the
//! completion estimate is the convolution of the transfer distribution
//! (receiving node → candidate) with the candidate's completion
//! distribution, so communication and computation uncertainty are weighed
//! together.
//!
//! All three selectors share the same deterministic tie-break: the receiving
//! (local) node wins first, then the lowest node id — gratuitous transfers
//! are never worth it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::{EtcMatrix, EttMatrix};
use crate::stats::{convolve_normals, prob_before};
use crate::taskmodel::{NodeId, SimTime, Task, TaskId, TaskType, Urgency};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    /// Highest Probability of Success.
    Hps,
    /// Minimum Expected Completion Time.
    Mect,
    /// Success with Computational Certainty (maximum expected slack, with a
    /// drop rule for hopeless tasks).
    Scc,
}

impl Heuristic {
    pub const ALL: [Heuristic; 3] = [Heuristic::Hps, Heuristic::Mect, Heuristic::Scc];

    pub fn name(&self) -> &'static str {
        match self {
            Heuristic::Hps => "hps",
            Heuristic::Mect => "mect",
            Heuristic::Scc => "scc",
        }
    }

    /// Stable numeric code used when deriving sweep-cell seeds; adding a
    /// heuristic must not change the draws of existing cells.
    pub fn code(&self) -> u64 {
        match self {
            Heuristic::Hps => 0,
            Heuristic::Mect => 1,
            Heuristic::Scc => 2,
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Heuristic {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hps" => Ok(Heuristic::Hps),
            "mect" => Ok(Heuristic::Mect),
            "scc" => Ok(Heuristic::Scc),
            other => Err(format!(
                "unknown heuristic `{other}`, expected one of `hps`, `mect`, `scc`"
            )),
        }
    }
}

/// Where the balancer sends a task based on its latency class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Federation,
    Cloud,
}

/// Urgent tasks stay in the federation; tolerant ones go to the cloud.
pub fn route_by_urgency(task: &Task, types: &[TaskType]) -> Tier {
    match types[task.type_id].urgency {
        Urgency::Urgent => Tier::Federation,
        Urgency::Tolerant => Tier::Cloud,
    }
}

/// Outcome of one allocation decision. `score` is the winning probability
/// for HPS, the expected completion time in seconds for MECT, and the
/// expected slack in seconds for SCC. `dropped` can only be set by SCC, and
/// a dropped decision carries no target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationDecision {
    pub task: TaskId,
    pub target: Option<NodeId>,
    pub score: f64,
    pub dropped: bool,
}

/// Probability that `task`, allocated now to `candidate`, completes before
/// its deadline. A local candidate uses its completion distribution
/// directly; a remote one first convolves in the transfer distribution from
/// the receiving node.
pub fn success_probability(
    task: &Task,
    candidate: NodeId,
    receiving: NodeId,
    etc: &EtcMatrix,
    ett: &EttMatrix,
    now: SimTime,
) -> f64 {
    let completion = etc.dist(task.type_id, candidate);
    let dist = if candidate == receiving {
        completion
    } else {
        convolve_normals(ett.dist(receiving, candidate), completion)
    };
    prob_before(dist, task.deadline - now)
}

/// Candidates in tie-break order: the receiving node first, then the rest by
/// ascending id. `nodes` is expected sorted ascending.
fn tie_break_order<'a>(
    nodes: &'a [NodeId],
    receiving: NodeId,
) -> impl Iterator<Item = NodeId> + 'a {
    let local = nodes.iter().copied().filter(move |&n| n == receiving);
    let rest = nodes.iter().copied().filter(move |&n| n != receiving);
    local.chain(rest)
}

/// Select by strictly-greater score over the tie-break order, so equal
/// scores resolve to the earliest candidate.
fn argmax_by_score(
    nodes: &[NodeId],
    receiving: NodeId,
    mut score: impl FnMut(NodeId) -> f64,
) -> (NodeId, f64) {
    assert!(!nodes.is_empty(), "allocation over an empty node list");
    let mut best: Option<(NodeId, f64)> = None;
    for node in tie_break_order(nodes, receiving) {
        let s = score(node);
        match best {
            Some((_, bs)) if s <= bs => {}
            _ => best = Some((node, s)),
        }
    }
    best.expect("at least one candidate")
}

/// HPS: allocate to the node with the highest probability of meeting the
/// deadline. Never drops.
pub fn hps_select(
    task: &Task,
    nodes: &[NodeId],
    receiving: NodeId,
    etc: &EtcMatrix,
    ett: &EttMatrix,
    now: SimTime,
) -> AllocationDecision {
    let (target, score) = argmax_by_score(nodes, receiving, |n| {
        success_probability(task, n, receiving, etc, ett, now)
    });
    AllocationDecision {
        task: task.id,
        target: Some(target),
        score,
        dropped: false,
    }
}

/// MECT: allocate to the node with the minimum expected completion time,
/// computation mean only — transfer time and variance are ignored. Never
/// drops.
pub fn mect_select(
    task: &Task,
    nodes: &[NodeId],
    receiving: NodeId,
    etc: &EtcMatrix,
    _ett: &EttMatrix,
    now: SimTime,
) -> AllocationDecision {
    let _ = now;
    let (target, neg_mean) =
        argmax_by_score(nodes, receiving, |n| -etc.dist(task.type_id, n).mean);
    AllocationDecision {
        task: task.id,
        target: Some(target),
        score: -neg_mean,
        dropped: false,
    }
}

/// SCC: allocate to the node with the maximum expected slack
/// (remaining budget minus expected computation time); when no node has
/// positive slack the task is dropped on the spot and counts as a miss.
pub fn scc_select(
    task: &Task,
    nodes: &[NodeId],
    receiving: NodeId,
    etc: &EtcMatrix,
    _ett: &EttMatrix,
    now: SimTime,
) -> AllocationDecision {
    let budget = task.deadline - now;
    let (target, slack) =
        argmax_by_score(nodes, receiving, |n| budget - etc.dist(task.type_id, n).mean);
    if slack <= 0.0 {
        AllocationDecision {
            task: task.id,
            target: None,
            score: slack,
            dropped: true,
        }
    } else {
        AllocationDecision {
            task: task.id,
            target: Some(target),
            score: slack,
            dropped: false,
        }
    }
}

pub fn select(
    heuristic: Heuristic,
    task: &Task,
    nodes: &[NodeId],
    receiving: NodeId,
    etc: &EtcMatrix,
    ett: &EttMatrix,
    now: SimTime,
) -> AllocationDecision {
    match heuristic {
        Heuristic::Hps => hps_select(task, nodes, receiving, etc, ett, now),
        Heuristic::Mect => mect_select(task, nodes, receiving, etc, ett, now),
        Heuristic::Scc => scc_select(task, nodes, receiving, etc, ett, now),
    }
}
