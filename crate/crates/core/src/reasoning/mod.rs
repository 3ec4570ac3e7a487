//! Evaluator, visionary and stop-check roles behind one interface.
//!
//! Two implementations ship: [`ScriptedBackend`], a deterministic oracle over
//! ground truth with configurable noise, and [`RemoteBackend`], which talks
//! to a chat-completion endpoint (optionally recording or replaying traffic).

mod parse;
mod remote;
mod scripted;

pub use parse::{parse_score, parse_verdict};
pub use remote::{
    HttpTransport, PromptTemplates, RecordingTransport, RemoteBackend, RemoteConfig, RemoteSetupError, ReplayTransport,
    Transport, TransportError,
};
pub use scripted::{scripted_check_found, scripted_envision, scripted_evaluate, ScriptedBackend, ScriptedOracleParams};

use crate::world::{GoalSpec, SceneDescription};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Likert score in `1..=5` plus the time the query took.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    value: u8,
    pub latency: f64,
}

impl EvalScore {
    /// Clamps `value` into `1..=5`.
    pub fn new(value: i64, latency: f64) -> Self {
        EvalScore { value: value.clamp(1, 5) as u8, latency: latency.max(0.0) }
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    /// Maps `1..=5` onto `[0, 1]`.
    pub fn normalized(&self) -> f64 {
        normalize_likert(self.value as f64)
    }
}

/// `(v - 1) / 4`.
pub fn normalize_likert(v: f64) -> f64 {
    (v - 1.0) / 4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envisioned {
    pub scene: SceneDescription,
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub found: bool,
    pub latency: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FailureKind {
    #[error("reply could not be parsed: {0:?}")]
    Unparseable(String),
    #[error("endpoint unavailable: {0}")]
    Unavailable(String),
}

/// A failed query. The time spent is still charged to the compute ledger.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{kind} (after {latency:.3} s)")]
pub struct CallFailure {
    pub kind: FailureKind,
    pub latency: f64,
}

/// The three model roles. `key` is a stable per-call identity that
/// deterministic backends use to derive their randomness.
pub trait ReasoningBackend: Send + Sync {
    /// Likelihood, on a 1-5 scale, that the goal is achievable from this scene.
    fn evaluate(&self, goal: &GoalSpec, scene: &SceneDescription, key: u64) -> Result<EvalScore, CallFailure>;
    /// Predicts the scene one step further along the scene's heading.
    fn envision(&self, scene: &SceneDescription, key: u64) -> Result<Envisioned, CallFailure>;
    /// Whether the agent should declare the goal found here.
    fn check_found(&self, goal: &GoalSpec, scene: &SceneDescription, key: u64) -> Result<Verdict, CallFailure>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Evaluate,
    Envision,
    CheckFound,
}

/// One backend call in the compute-time ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub role: Role,
    pub frontier: Option<u64>,
    pub latency: f64,
    pub ok: bool,
}

/// Records calls made through a backend, one entry each.
#[derive(Debug, Default, Clone)]
pub struct CallLog {
    pub step: usize,
    pub frontier: Option<u64>,
    pub entries: Vec<LedgerEntry>,
    pub unavailable: usize,
}

impl CallLog {
    pub fn new(step: usize, frontier: Option<u64>) -> Self {
        CallLog { step, frontier, entries: Vec::new(), unavailable: 0 }
    }

    fn record<T>(&mut self, role: Role, result: &Result<T, CallFailure>, latency_of: impl Fn(&T) -> f64) {
        let (latency, ok) = match result {
            Ok(v) => (latency_of(v), true),
            Err(f) => {
                if matches!(f.kind, FailureKind::Unavailable(_)) {
                    self.unavailable += 1;
                }
                (f.latency, false)
            }
        };
        self.entries.push(LedgerEntry { step: self.step, role, frontier: self.frontier, latency, ok });
    }

    pub fn evaluate(
        &mut self,
        backend: &dyn ReasoningBackend,
        goal: &GoalSpec,
        scene: &SceneDescription,
        key: u64,
    ) -> Result<EvalScore, CallFailure> {
        let r = backend.evaluate(goal, scene, key);
        self.record(Role::Evaluate, &r, |s| s.latency);
        r
    }

    pub fn envision(
        &mut self,
        backend: &dyn ReasoningBackend,
        scene: &SceneDescription,
        key: u64,
    ) -> Result<Envisioned, CallFailure> {
        let r = backend.envision(scene, key);
        self.record(Role::Envision, &r, |e| e.latency);
        r
    }

    pub fn check_found(
        &mut self,
        backend: &dyn ReasoningBackend,
        goal: &GoalSpec,
        scene: &SceneDescription,
        key: u64,
    ) -> Result<Verdict, CallFailure> {
        let r = backend.check_found(goal, scene, key);
        self.record(Role::CheckFound, &r, |v| v.latency);
        r
    }

    pub fn calls(&self) -> usize {
        self.entries.len()
    }

    pub fn absorb(&mut self, other: CallLog) {
        self.entries.extend(other.entries);
        self.unavailable += other.unavailable;
    }
}
