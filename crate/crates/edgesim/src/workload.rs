//! Workload generation: a stream of applications, each a burst of tasks, on
//! a seeded RNG stream.
//!
//! Application start times form a Poisson process with rate
//! `num_applications / arrival_window_s`; tasks within an application form a
//! second Poisson stream at `1 / task_interarrival_mean_s`. An optional
//! burst window multiplies the application arrival rate, modeling an
//! incident surge. Task lengths are truncated-normal draws from the type's
//! length distribution, floored at `min_task_length_mi` so execution times
//! stay positive.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::stats::{sample_truncated_normal, NormalDist};
use crate::taskmodel::{NodeId, SimTime, TaskType, TypeId, Urgency};
use crate::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstSpec {
    pub start_s: f64,
    pub duration_s: f64,
    pub rate_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub num_applications: u32,
    /// Inclusive uniform range of tasks per application.
    pub tasks_per_app: [u32; 2],
    /// Probability weights over the task types; must sum to 1.
    pub type_mix: Vec<f64>,
    /// Application starts spread over this window as a Poisson process.
    pub arrival_window_s: f64,
    /// Mean exponential inter-arrival between tasks of one application.
    pub task_interarrival_mean_s: f64,
    /// Lower truncation bound for sampled task lengths, in MI.
    pub min_task_length_mi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst: Option<BurstSpec>,
}

/// One generated task before deadline assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskDraw {
    pub type_id: TypeId,
    pub origin: NodeId,
    pub arrival: SimTime,
    pub length_mi: f64,
}

/// Generates the task stream for one run, sorted by arrival time. The same
/// `(spec, types, num_nodes, seed)` always yields the identical stream.
/// Draws whose arrival falls past `horizon_s` are discarded.
pub fn generate(
    spec: &WorkloadSpec,
    types: &[TaskType],
    num_nodes: usize,
    horizon_s: f64,
    seed: u64,
) -> Result<Vec<TaskDraw>, SimError> {
    if spec.num_applications == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let app_rate = spec.num_applications as f64 / spec.arrival_window_s;
    let task_rate = 1.0 / spec.task_interarrival_mean_s;

    let mut draws: Vec<(TaskDraw, usize)> = Vec::new();
    let mut app_start = 0.0;
    for _ in 0..spec.num_applications {
        app_start += exp_draw(&mut rng, rate_at(app_rate, app_start, spec.burst.as_ref()));
        let count = rng.gen_range(spec.tasks_per_app[0]..=spec.tasks_per_app[1]);
        let mut t = app_start;
        for k in 0..count {
            if k > 0 {
                t += exp_draw(&mut rng, task_rate);
            }
            let type_id = pick_type(&mut rng, &spec.type_mix);
            let origin = rng.gen_range(0..num_nodes);
            let length_mi = sample_truncated_normal(
                types[type_id].length_dist,
                spec.min_task_length_mi,
                &mut rng,
            )?;
            if t <= horizon_s {
                draws.push((
                    TaskDraw {
                        type_id,
                        origin,
                        arrival: t,
                        length_mi,
                    },
                    draws.len(),
                ));
            }
        }
    }
    // stable total order: arrival time, generation index for exact ties
    draws.sort_by(|(a, ia), (b, ib)| {
        a.arrival
            .partial_cmp(&b.arrival)
            .expect("finite arrival times")
            .then(ia.cmp(ib))
    });
    Ok(draws.into_iter().map(|(d, _)| d).collect())
}

fn exp_draw<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    debug_assert!(rate > 0.0);
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

fn rate_at(base: f64, t: f64, burst: Option<&BurstSpec>) -> f64 {
    match burst {
        Some(b) if t >= b.start_s && t < b.start_s + b.duration_s => base * b.rate_multiplier,
        _ => base,
    }
}

fn pick_type<R: Rng>(rng: &mut R, mix: &[f64]) -> TypeId {
    let total: f64 = mix.iter().sum();
    let mut u: f64 = rng.gen::<f64>() * total;
    for (i, &w) in mix.iter().enumerate() {
        u -= w;
        if u < 0.0 {
            return i;
        }
    }
    mix.len() - 1
}

/// The four default task types: two urgent, two tolerant, with distinct
/// length means. All values are calibration defaults and can be overridden
/// in the config file. Urgent means are sized so a task runs one to two
/// seconds on a 1500-2500 MIPS node, the regime where satellite latency
/// dominates routing decisions.
pub fn default_task_types() -> Vec<TaskType> {
    vec![
        TaskType {
            id: 0,
            name: "urgent-a".into(),
            urgency: Urgency::Urgent,
            length_dist: NormalDist::new(1500.0, 300.0),
            input_kb: 200.0,
            output_kb: 50.0,
            beta: 1.5,
            alpha: 1.0,
            epsilon_s: 0.25,
        },
        TaskType {
            id: 1,
            name: "urgent-b".into(),
            urgency: Urgency::Urgent,
            length_dist: NormalDist::new(3000.0, 600.0),
            input_kb: 500.0,
            output_kb: 100.0,
            beta: 1.5,
            alpha: 1.0,
            epsilon_s: 0.25,
        },
        TaskType {
            id: 2,
            name: "tolerant-a".into(),
            urgency: Urgency::Tolerant,
            length_dist: NormalDist::new(6000.0, 1200.0),
            input_kb: 1000.0,
            output_kb: 200.0,
            beta: 3.0,
            alpha: 1.0,
            epsilon_s: 1.0,
        },
        TaskType {
            id: 3,
            name: "tolerant-b".into(),
            urgency: Urgency::Tolerant,
            length_dist: NormalDist::new(12000.0, 2400.0),
            input_kb: 2000.0,
            output_kb: 400.0,
            beta: 3.0,
            alpha: 1.0,
            epsilon_s: 1.0,
        },
    ]
}
