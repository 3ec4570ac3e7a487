//! Deterministic stand-in for the language models, backed by ground truth.
//!
//! The evaluator scores a scene 5 when it mentions something that satisfies
//! the goal and otherwise decays with distance from the viewpoint to the goal
//! region. The visionary "imagines" by looking up the true scene one edge
//! further along. All randomness is keyed by the per-call seed.

use super::{CallFailure, Envisioned, EvalScore, ReasoningBackend, Verdict};
use crate::geometry::Point;
use crate::seed;
use crate::world::{
    check_goal_reached, distance_to_goal_region, mention_matches_goal, GoalSpec, ObservationNoise, ObservationParams,
    Pose, SceneDescription, SemanticWorld,
};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScriptedOracleParams {
    /// Probability that a score is nudged by ±1.
    pub score_noise: f64,
    /// Added to every score before clamping.
    pub optimism_bias: i64,
    pub latency_evaluate: f64,
    pub latency_envision: f64,
    pub latency_found: f64,
}

impl Default for ScriptedOracleParams {
    fn default() -> Self {
        ScriptedOracleParams {
            score_noise: 0.0,
            optimism_bias: 0,
            latency_evaluate: 2.0,
            latency_envision: 2.5,
            latency_found: 1.5,
        }
    }
}

fn scene_matches_goal(world: &SemanticWorld, goal: &GoalSpec, scene: &SceneDescription) -> bool {
    scene.mentioned_objects.iter().any(|m| mention_matches_goal(world, goal, &m.category, m.implied_position(scene)))
}

/// Noise-free score before bias.
fn true_score(world: &SemanticWorld, goal: &GoalSpec, scene: &SceneDescription) -> i64 {
    if scene_matches_goal(world, goal, scene) {
        return 5;
    }
    let d_max = world.bounds.diagonal();
    let d = distance_to_goal_region(world, scene.viewpoint(), goal).unwrap_or(d_max);
    5 - ((4.0 * d / d_max).round() as i64).min(4)
}

pub fn scripted_evaluate(
    world: &SemanticWorld,
    goal: &GoalSpec,
    scene: &SceneDescription,
    params: &ScriptedOracleParams,
    seed: u64,
) -> EvalScore {
    let mut value = true_score(world, goal, scene) + params.optimism_bias;
    let mut rng = seed::rng(seed);
    if rng.random::<f64>() < params.score_noise {
        value += if rng.random::<bool>() { 1 } else { -1 };
    }
    EvalScore::new(value, params.latency_evaluate)
}

/// Ground-truth lookahead `edge_length` along the scene's heading.
pub fn scripted_envision(
    world: &SemanticWorld,
    scene: &SceneDescription,
    observation: &ObservationParams,
    noise: &ObservationNoise,
    edge_length: f64,
    seed: u64,
) -> SceneDescription {
    let from = scene.viewpoint();
    let ahead = from.add(Point::polar(scene.heading, edge_length));
    let pose = Pose::new(ahead, scene.heading);
    if scene.blocked || !world.bounds.contains(ahead) {
        return SceneDescription::impassable(pose, scene.heading_index, scene.heading, !world.bounds.contains(ahead));
    }
    if !world.is_free(ahead) || !world.segment_clear(from, ahead) {
        return SceneDescription::impassable(pose, scene.heading_index, scene.heading, false);
    }
    crate::world::observe_toward(world, pose, scene.heading_index, scene.heading, observation, &noise.with_seed(seed))
}

/// True only at the goal and only when the goal is actually mentioned, so
/// dropped detections cause missed declarations.
pub fn scripted_check_found(world: &SemanticWorld, goal: &GoalSpec, scene: &SceneDescription) -> bool {
    !scene.blocked && check_goal_reached(world, scene.source_pose, goal) && scene_matches_goal(world, goal, scene)
}

/// [`ReasoningBackend`] over a shared world.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    pub world: Arc<SemanticWorld>,
    pub params: ScriptedOracleParams,
    pub observation: ObservationParams,
    pub noise: ObservationNoise,
    pub edge_length: f64,
}

impl ScriptedBackend {
    pub fn new(
        world: Arc<SemanticWorld>,
        params: ScriptedOracleParams,
        observation: ObservationParams,
        noise: ObservationNoise,
        edge_length: f64,
    ) -> Self {
        ScriptedBackend { world, params, observation, noise, edge_length }
    }
}

impl ReasoningBackend for ScriptedBackend {
    fn evaluate(&self, goal: &GoalSpec, scene: &SceneDescription, key: u64) -> Result<EvalScore, CallFailure> {
        Ok(scripted_evaluate(&self.world, goal, scene, &self.params, seed::mix(&[key, 1])))
    }

    fn envision(&self, scene: &SceneDescription, key: u64) -> Result<Envisioned, CallFailure> {
        let next = scripted_envision(
            &self.world,
            scene,
            &self.observation,
            &self.noise,
            self.edge_length,
            seed::mix(&[self.noise.seed, key, 2]),
        );
        Ok(Envisioned { scene: next, latency: self.params.latency_envision })
    }

    fn check_found(&self, goal: &GoalSpec, scene: &SceneDescription, _key: u64) -> Result<Verdict, CallFailure> {
        Ok(Verdict { found: scripted_check_found(&self.world, goal, scene), latency: self.params.latency_found })
    }
}
