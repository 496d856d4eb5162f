//! Tasks, task types, and deadline semantics shared by every other module.
//!
//! A task's absolute deadline is fixed once, at arrival:
//!
//! ```text
//! deadline = arrival + beta * avg_completion + alpha * d_comm + epsilon
//! ```
//!
//! where `avg_completion` is the mean execution time of the task's type over
//! all edge nodes computed from design-time length means (a property of the
//! type and the platform, deliberately independent of current congestion),
//! `d_comm` is the deterministic part of the mean transfer time within the
//! task's tier (federation for urgent types, the satellite link to the cloud
//! for tolerant ones), and `beta`/`alpha`/`epsilon` are per-type constants.

use serde::{Deserialize, Serialize};

use crate::stats::NormalDist;
use crate::SimError;

pub type TypeId = usize;
pub type NodeId = usize;
pub type TaskId = u64;
/// Simulation time in seconds from run start.
pub type SimTime = f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Urgency {
    /// Latency-intolerant; served within the edge federation.
    Urgent,
    /// Latency-tolerant; forwarded to the cloud over the satellite link.
    Tolerant,
}

/// A class of service requests with a common length distribution, payload
/// size, and deadline constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskType {
    pub id: TypeId,
    pub name: String,
    pub urgency: Urgency,
    /// Task length in million instructions (MI).
    pub length_dist: NormalDist,
    pub input_kb: f64,
    pub output_kb: f64,
    /// Computing constant: weight of the average completion time in the
    /// deadline.
    pub beta: f64,
    /// Communication constant: weight of the tier communication latency.
    pub alpha: f64,
    /// System slack added to every deadline, in seconds.
    pub epsilon_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskState {
    Created,
    Transferring,
    Queued,
    Executing,
    Completed,
    Dropped,
}

/// One service request. `deadline` is absolute simulation time; `length_mi`
/// is the realized draw from the type's length distribution.
#[derive(Debug, Clone)]
pub struct Task {
    pub id: TaskId,
    pub type_id: TypeId,
    pub origin: NodeId,
    pub arrival_time: SimTime,
    pub length_mi: f64,
    pub deadline: SimTime,
    pub state: TaskState,
}

impl Task {
    pub fn new(
        id: TaskId,
        type_id: TypeId,
        origin: NodeId,
        arrival_time: SimTime,
        length_mi: f64,
        deadline: SimTime,
    ) -> Self {
        assert!(length_mi > 0.0, "task {id}: non-positive length {length_mi}");
        assert!(
            deadline > arrival_time,
            "task {id}: deadline {deadline} not after arrival {arrival_time}"
        );
        Task {
            id,
            type_id,
            origin,
            arrival_time,
            length_mi,
            deadline,
            state: TaskState::Created,
        }
    }
}

/// Absolute deadline for a task arriving at `arrival`:
/// `arrival + beta * avg_completion + alpha * d_comm + epsilon`.
pub fn assign_deadline(
    arrival: SimTime,
    ttype: &TaskType,
    avg_completion: f64,
    d_comm: f64,
) -> Result<SimTime, SimError> {
    if !(avg_completion > 0.0) {
        return Err(SimError::config(
            "avg_completion",
            format!("must be > 0 (got {avg_completion})"),
        ));
    }
    Ok(arrival + ttype.beta * avg_completion + ttype.alpha * d_comm + ttype.epsilon_s)
}

/// Mean execution time of a task type across the edge federation, from the
/// design-time length mean: mean over nodes of `length_mean / mips`.
pub fn avg_completion_over_edges(ttype: &TaskType, node_mips: &[f64]) -> Result<f64, SimError> {
    if node_mips.is_empty() {
        return Err(SimError::config("nodes", "at least one edge node required"));
    }
    let sum: f64 = node_mips
        .iter()
        .map(|&mips| ttype.length_dist.mean / mips)
        .sum();
    Ok(sum / node_mips.len() as f64)
}
