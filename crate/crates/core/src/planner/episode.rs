//! The episode control loop and its log.

use super::scoring::score_frontier;
use super::travel::{plan_route, sample_route};
use super::{Method, PlannerError, PlannerParams};
use crate::frontier::{select_frontier, BufferSnapshot, FrontierBuffer, FrontierError, Pathpoint};
use crate::geometry::Point;
use crate::metrics::{interaction_term, EpisodeOutcome};
use crate::reasoning::{CallLog, LedgerEntry, ReasoningBackend};
use crate::seed;
use crate::world::{
    check_goal_reached, observe, satisfies_path_constraint, shortest_path_length, GoalSpec, ObservationNoise,
    ObservationParams, Pose, SemanticWorld, DEFAULT_CORRIDOR_THRESHOLD,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EPISODE_SCHEMA_VERSION: u32 = 1;

const TAG_FRONTIER: u64 = 0x46;
const TAG_CHECK: u64 = 0x43;
const TAG_OBSERVE: u64 = 0x4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    FoundDeclared,
    BudgetExhausted,
    BufferEmpty,
    MaxSteps,
}

/// The agent's camera and captioner. `observation.n_headings` is replaced by the planner's `n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Sensing {
    pub observation: ObservationParams,
    pub noise: ObservationNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub goal: GoalSpec,
    pub start: Pose,
    pub method: Method,
    pub seed: u64,
}

/// Everything an episode produced. Serialized as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub schema_version: u32,
    pub method: Method,
    pub seed: u64,
    pub goal: GoalSpec,
    pub start: Pose,
    pub params: PlannerParams,
    pub sensing: Sensing,
    pub termination: Termination,
    /// Completed planning steps (observe, score, check, and possibly move).
    pub steps: usize,
    pub pathpoints: Vec<Pathpoint>,
    /// Start pose followed by samples at most 1 m apart.
    pub trajectory: Vec<Pose>,
    pub snapshots: Vec<BufferSnapshot>,
    pub ledger: Vec<LedgerEntry>,
    pub compute_time: f64,
    pub travel_time: f64,
    pub path_length: f64,
    pub outcome: EpisodeOutcome,
}

impl EpisodeLog {
    pub fn final_pose(&self) -> Pose {
        *self.trajectory.last().unwrap_or(&self.start)
    }

    pub fn interaction(&self) -> f64 {
        interaction_term(self.compute_time, self.travel_time, self.params.t_max)
    }
}

/// Runs one episode to termination.
///
/// Each step observes `n` views from the current pose, expands and scores the
/// new frontiers (concurrently, merged by frontier id), asks the stop check
/// about each view, then commits to the best frontier in the whole buffer and
/// travels there. The budget is checked between steps.
pub fn run_episode(
    world: &SemanticWorld,
    spec: &EpisodeSpec,
    backend: &dyn ReasoningBackend,
    params: &PlannerParams,
    sensing: &Sensing,
) -> Result<EpisodeLog, PlannerError> {
    params.validate()?;
    let observation = ObservationParams { n_headings: params.n, ..sensing.observation };
    let noise = sensing.noise.with_seed(seed::mix(&[spec.seed, TAG_OBSERVE]));
    let expansion = params.expansion();
    let goal = &spec.goal;

    let mut pose = spec.start;
    let mut buffer = FrontierBuffer::new(pose);
    let mut trajectory = vec![pose];
    let mut snapshots = Vec::new();
    let mut ledger: Vec<LedgerEntry> = Vec::new();
    let mut ct = 0.0;
    let mut path_length = 0.0;
    let mut step = 0;

    let termination = loop {
        let tt = path_length / params.agent_speed;
        if ct + tt >= params.t_max {
            break Termination::BudgetExhausted;
        }
        if step >= params.max_steps {
            break Termination::MaxSteps;
        }

        let scenes: Vec<_> = (0..params.n).map(|i| observe(world, pose, i, &observation, &noise)).collect();
        let new_ids = buffer.expand(world, pose, scenes.clone(), &expansion);

        let scored: Vec<(u64, f64, CallLog)> = new_ids
            .par_iter()
            .map(|&id| {
                let frontier = buffer.get(id).expect("just expanded");
                let mut log = CallLog::new(step, Some(id));
                let key = seed::mix(&[spec.seed, TAG_FRONTIER, id]);
                let q = score_frontier(spec.method, frontier, goal, backend, params, key, &mut log);
                (id, q, log)
            })
            .collect();
        let mut step_log = CallLog::new(step, None);
        for (id, q, log) in scored {
            if let Some(f) = buffer.open_mut().iter_mut().find(|f| f.id == id) {
                f.set_score(q);
            }
            step_log.absorb(log);
        }

        let mut found = false;
        for (i, scene) in scenes.iter().enumerate() {
            let key = seed::mix(&[spec.seed, TAG_CHECK, step as u64, i as u64]);
            if step_log.check_found(backend, goal, scene, key).is_ok_and(|v| v.found) {
                found = true;
                break;
            }
        }

        if step_log.calls() > 0 && step_log.unavailable == step_log.calls() {
            return Err(PlannerError::BackendUnavailable { step });
        }
        for e in step_log.entries {
            ct += e.latency;
            ledger.push(e);
        }

        if found {
            snapshots.push(buffer.snapshot(step, pose, &params.penalty, None));
            step += 1;
            break Termination::FoundDeclared;
        }

        let target = match select_frontier(&buffer, pose.position, &params.penalty) {
            Ok(f) => f.id,
            Err(FrontierError::EmptyBuffer) => {
                snapshots.push(buffer.snapshot(step, pose, &params.penalty, None));
                step += 1;
                break Termination::BufferEmpty;
            }
            Err(e) => unreachable!("every open frontier is scored: {e}"),
        };
        snapshots.push(buffer.snapshot(step, pose, &params.penalty, Some(target)));

        let via: Vec<Point> = buffer.committed().iter().map(|c| c.position).collect();
        let dest = buffer.commit(target).expect("selected frontier is open");
        let route = plan_route(world, &via, pose.position, dest.position);
        let samples = sample_route(&route);
        for leg in route.windows(2) {
            path_length += leg[0].distance(leg[1]);
        }
        let heading = samples.last().map(|p| p.heading).unwrap_or(pose.heading);
        trajectory.extend(samples);
        buffer.set_current_heading(heading);
        pose = Pose::new(dest.position, heading);
        step += 1;
    };

    let travel_time = path_length / params.agent_speed;
    let final_pose = *trajectory.last().expect("trajectory holds the start");
    let in_corridor = |prefix: &[Pose]| {
        goal.corridor().is_none_or(|c| satisfies_path_constraint(prefix, c, DEFAULT_CORRIDOR_THRESHOLD))
    };
    let success = termination == Termination::FoundDeclared
        && check_goal_reached(world, final_pose, goal)
        && in_corridor(&trajectory)
        && ct + travel_time <= params.t_max;
    let oracle_success =
        (0..trajectory.len()).any(|i| check_goal_reached(world, trajectory[i], goal) && in_corridor(&trajectory[..=i]));
    // computed only now, so the planner never sees it
    let shortest_length = shortest_path_length(world, spec.start, goal).ok();

    Ok(EpisodeLog {
        schema_version: EPISODE_SCHEMA_VERSION,
        method: spec.method,
        seed: spec.seed,
        goal: goal.clone(),
        start: spec.start,
        params: *params,
        sensing: *sensing,
        termination,
        steps: step,
        pathpoints: buffer.committed().to_vec(),
        trajectory,
        snapshots,
        ledger,
        compute_time: ct,
        travel_time,
        path_length,
        outcome: EpisodeOutcome {
            level: goal.level(),
            success,
            oracle_success,
            shortest_length,
            actual_length: path_length,
            ct,
            tt: travel_time,
        },
    })
}
