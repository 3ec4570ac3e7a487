//! Ground-truth 2D semantic world.
//!
//! The world is loaded once from a JSON world file, validated, and then
//! treated as immutable. Everything the agent perceives is derived from it
//! through [`observe`], and every success judgment goes through the goal
//! oracle in [`goal`].

mod goal;
mod observe;
mod shortest;

pub use goal::{
    check_goal_reached, distance_to_goal_region, generate_goals, goal_sites, mention_matches_goal,
    satisfies_path_constraint, GoalKind, GoalParams, GoalSpec, PathCorridor, DEFAULT_CORRIDOR_THRESHOLD,
};
pub(crate) use observe::observe_toward;
pub use observe::{observe, Mention, ObservationNoise, ObservationParams, SceneDescription};
pub use shortest::{shortest_path_length, GRID_RESOLUTION};

use crate::geometry::{normalize_angle, Bounds, Point, Polygon};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("failed to read world file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed world document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("world bounds are empty or not finite")]
    InvalidBounds,
    #[error("object `{id}` at ({x}, {y}) lies outside the world bounds")]
    ObjectOutOfBounds { id: String, x: f64, y: f64 },
    #[error("object id `{0}` is not unique")]
    DuplicateObjectId(String),
    #[error("object `{0}` has an empty category")]
    EmptyCategory(String),
    #[error("polygon of region `{label}` (index {index}) is not simple")]
    RegionNotSimple { label: String, index: usize },
    #[error("obstacle {0} is not a simple polygon")]
    ObstacleNotSimple(usize),
    #[error("obstacle {obstacle} covers object `{id}`")]
    ObstacleCoversObject { obstacle: usize, id: String },
    #[error("invalid goal: {0}")]
    InvalidGoal(String),
    #[error("no candidate goals for level {0} in this world")]
    NoCandidates(u8),
    #[error("goal is unreachable from ({x}, {y})")]
    UnreachableGoal { x: f64, y: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: String,
    pub category: String,
    pub position: Point,
    #[serde(default)]
    pub attributes: BTreeSet<String>,
    #[serde(default)]
    pub affordances: BTreeSet<String>,
}

/// Validated ground truth. Construct through [`load_world`] or [`SemanticWorld::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticWorld {
    pub bounds: Bounds,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub objects: Vec<ObjectInstance>,
    #[serde(default)]
    pub obstacles: Vec<Polygon>,
}

/// Agent pose. The heading is kept in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point,
    pub heading: f64,
}

impl Pose {
    pub fn new(position: Point, heading: f64) -> Self {
        Pose { position, heading: normalize_angle(heading) }
    }
}

/// Parses and validates a world-file document.
pub fn load_world(document: &str) -> Result<SemanticWorld, WorldError> {
    let world: SemanticWorld = serde_json::from_str(document)?;
    world.validate()?;
    Ok(world)
}

pub fn load_world_file(path: impl AsRef<Path>) -> Result<SemanticWorld, WorldError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| WorldError::Io { path: path.display().to_string(), source })?;
    load_world(&text)
}

impl SemanticWorld {
    pub fn new(
        bounds: Bounds,
        regions: Vec<Region>,
        objects: Vec<ObjectInstance>,
        obstacles: Vec<Polygon>,
    ) -> Result<Self, WorldError> {
        let world = SemanticWorld { bounds, regions, objects, obstacles };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let b = &self.bounds;
        if ![b.min_x, b.min_y, b.max_x, b.max_y].iter().all(|v| v.is_finite())
            || b.max_x <= b.min_x
            || b.max_y <= b.min_y
        {
            return Err(WorldError::InvalidBounds);
        }
        let mut ids = HashSet::new();
        for obj in &self.objects {
            if obj.category.trim().is_empty() {
                return Err(WorldError::EmptyCategory(obj.id.clone()));
            }
            if !obj.position.is_finite() || !b.contains(obj.position) {
                return Err(WorldError::ObjectOutOfBounds { id: obj.id.clone(), x: obj.position.x, y: obj.position.y });
            }
            if !ids.insert(obj.id.as_str()) {
                return Err(WorldError::DuplicateObjectId(obj.id.clone()));
            }
        }
        for (index, region) in self.regions.iter().enumerate() {
            if !region.polygon.is_simple() {
                return Err(WorldError::RegionNotSimple { label: region.label.clone(), index });
            }
        }
        for (index, obstacle) in self.obstacles.iter().enumerate() {
            if !obstacle.is_simple() {
                return Err(WorldError::ObstacleNotSimple(index));
            }
            if let Some(obj) = self.objects.iter().find(|o| obstacle.contains(o.position)) {
                return Err(WorldError::ObstacleCoversObject { obstacle: index, id: obj.id.clone() });
            }
        }
        Ok(())
    }

    /// Inside the bounds and outside every obstacle.
    pub fn is_free(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// True when the straight segment stays inside the bounds and touches no obstacle.
    pub fn segment_clear(&self, a: Point, b: Point) -> bool {
        self.bounds.contains(a) && self.bounds.contains(b) && !self.obstacles.iter().any(|o| o.intersects_segment(a, b))
    }

    /// Label of the first region containing `p`, in file order.
    pub fn region_at(&self, p: Point) -> Option<&str> {
        self.regions.iter().find(|r| r.polygon.contains(p)).map(|r| r.label.as_str())
    }

    /// Distinct object categories, sorted.
    pub fn categories(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.objects.iter().map(|o| o.category.as_str()).collect();
        set.into_iter().collect()
    }

    /// Distinct affordance tags, sorted.
    pub fn affordance_tags(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.objects.iter().flat_map(|o| o.affordances.iter().map(String::as_str)).collect();
        set.into_iter().collect()
    }
}
