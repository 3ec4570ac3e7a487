//! Frontier scoring by imagined rollouts, the two baselines, and the episode loop.

mod episode;
mod scoring;
mod travel;

pub use episode::{run_episode, EpisodeLog, EpisodeSpec, Sensing, Termination, EPISODE_SCHEMA_VERSION};
pub use scoring::{greedy_eval_score, mcts_score, rrt_score, score_frontier, UCT_EXPLORATION};
pub use travel::{plan_route, sample_route, TRAJECTORY_SPACING};

use crate::frontier::{DistancePenaltyParams, ExpansionParams};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlannerError {
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error("reasoning backend unavailable for every call at step {step}")]
    BackendUnavailable { step: usize },
}

/// How new frontiers are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Imagined rollouts of depth `l`.
    ReasonedExplorer,
    /// UCT over an imagined tree.
    LlmMcts,
    /// One evaluation of the frontier's own scene.
    LlmAsEval,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ReasonedExplorer, Method::LlmMcts, Method::LlmAsEval];

    pub fn label(self) -> &'static str {
        match self {
            Method::ReasonedExplorer => "reasoned-explorer",
            Method::LlmMcts => "llm-mcts",
            Method::LlmAsEval => "llm-as-eval",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected reasoned-explorer, llm-mcts or llm-as-eval)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Branching factor: views per pose and frontiers per expansion.
    pub n: usize,
    /// Imagined rollout depth.
    pub l: usize,
    /// Rollouts per frontier; `n` when unset.
    pub b: Option<usize>,
    pub penalty: DistancePenaltyParams,
    pub max_steps: usize,
    /// Time budget for compute plus travel, seconds.
    pub t_max: f64,
    pub edge_length: f64,
    pub dedup_radius: f64,
    /// m/s.
    pub agent_speed: f64,
    pub mcts_iterations: usize,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            n: 3,
            l: 2,
            b: None,
            penalty: DistancePenaltyParams::default(),
            max_steps: 200,
            t_max: 1800.0,
            edge_length: 10.0,
            dedup_radius: 3.0,
            agent_speed: 1.5,
            mcts_iterations: 10,
        }
    }
}

impl PlannerParams {
    pub fn rollouts(&self) -> usize {
        self.b.unwrap_or(self.n)
    }

    pub fn expansion(&self) -> ExpansionParams {
        ExpansionParams { n: self.n, edge_length: self.edge_length, dedup_radius: self.dedup_radius }
    }

    /// `t_max = 0` is accepted and yields an immediately exhausted budget.
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::InvalidParams(m.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.b == Some(0) {
            return bad("b must be at least 1");
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be a finite non-negative number of seconds");
        }
        if !(self.edge_length > 0.0 && self.edge_length.is_finite()) {
            return bad("edge_length must be positive");
        }
        if !(self.dedup_radius >= 0.0 && self.dedup_radius.is_finite()) {
            return bad("dedup_radius must be non-negative");
        }
        if !(self.agent_speed > 0.0 && self.agent_speed.is_finite()) {
            return bad("agent_speed must be positive");
        }
        self.penalty.validate().map_err(|e| PlannerError::InvalidParams(e.to_string()))
    }
}
