//! Language-model guided frontier exploration over a simulated 2D semantic world.
//!
//! The crate is organized bottom-up:
//!
//! - [`world`]: ground truth, the simulated captioner, goals and success oracles
//! - [`frontier`]: the expanding topological graph and frontier selection
//! - [`reasoning`]: evaluator / visionary / stop-check roles behind one trait
//! - [`planner`]: imagined-rollout scoring, baselines and the episode loop
//! - [`metrics`]: SR, OSR, SPL and the compute-adjusted success rate
//! - [`suite`]: experiment orchestration, sweeps and plot-data emission

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod frontier;
pub mod geometry;
pub mod metrics;
pub mod planner;
pub mod reasoning;
pub mod seed;
pub mod suite;
pub mod world;
