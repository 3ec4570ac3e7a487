//! Simulated captioner: turns ground truth at a pose into a scene description.

use super::{Pose, SemanticWorld};
use crate::geometry::{angle_diff, normalize_angle, Point};
use crate::seed;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Camera layout: `n_headings` views tiling the circle, each a cone of `fov_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationParams {
    pub n_headings: usize,
    pub fov_deg: f64,
    pub range: f64,
}

impl Default for ObservationParams {
    fn default() -> Self {
        ObservationParams { n_headings: 3, fov_deg: 120.0, range: 20.0 }
    }
}

impl ObservationParams {
    pub fn fov(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    /// Absolute direction of view `heading_index` for an agent facing `base_heading`.
    pub fn view_heading(&self, base_heading: f64, heading_index: usize) -> f64 {
        normalize_angle(base_heading + TAU * heading_index as f64 / self.n_headings as f64)
    }
}

/// Captioning failure model: missed detections and spurious objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationNoise {
    pub p_drop: f64,
    pub p_hallucinate: f64,
    pub seed: u64,
}

impl Default for ObservationNoise {
    fn default() -> Self {
        ObservationNoise { p_drop: 0.0, p_hallucinate: 0.0, seed: 0 }
    }
}

impl ObservationNoise {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ObservationNoise { seed, ..self }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.p_drop) && (0.0..=1.0).contains(&self.p_hallucinate)
    }
}

/// One object named in a description: category plus where it appeared.
/// `bearing` is relative to the view heading (positive is to the left).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub category: String,
    pub bearing: f64,
    pub range: f64,
}

impl Mention {
    /// World position implied by the mention, seen from `scene`.
    pub fn implied_position(&self, scene: &SceneDescription) -> Point {
        scene.source_pose.position.add(Point::polar(scene.heading + self.bearing, self.range))
    }
}

/// Text observation at a pose toward one heading. `mentioned_objects` is the
/// machine-readable shadow of `text`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub source_pose: Pose,
    pub heading_index: usize,
    /// Absolute view direction in radians.
    pub heading: f64,
    pub region: Option<String>,
    pub text: String,
    pub mentioned_objects: Vec<Mention>,
    /// Set when the viewpoint itself is out of bounds or inside an obstacle.
    #[serde(default)]
    pub blocked: bool,
}

impl SceneDescription {
    pub fn viewpoint(&self) -> Point {
        self.source_pose.position
    }

    pub fn mentions(&self, category: &str) -> bool {
        self.mentioned_objects.iter().any(|m| m.category == category)
    }

    /// Description of a viewpoint the agent could not occupy.
    pub fn impassable(source_pose: Pose, heading_index: usize, heading: f64, out_of_bounds: bool) -> Self {
        let what = if out_of_bounds { "the boundary of the area" } else { "an obstacle" };
        SceneDescription {
            source_pose,
            heading_index,
            heading,
            region: None,
            text: format!("Impassable: the way ahead is blocked by {what}."),
            mentioned_objects: Vec::new(),
            blocked: true,
        }
    }
}

fn direction_words(bearing: f64) -> &'static str {
    let deg = bearing.to_degrees();
    if deg.abs() <= 15.0 {
        "ahead"
    } else if deg > 0.0 && deg <= 45.0 {
        "ahead to the left"
    } else if deg > 45.0 {
        "to the left"
    } else if deg >= -45.0 {
        "ahead to the right"
    } else {
        "to the right"
    }
}

fn render_text(region: Option<&str>, mentions: &[Mention]) -> String {
    let mut text = match region {
        Some(r) => format!("Standing in the {r}."),
        None => "Standing on open ground.".to_string(),
    };
    if mentions.is_empty() {
        text.push_str(" Nothing notable in view.");
        return text;
    }
    let parts: Vec<String> = mentions
        .iter()
        .map(|m| {
            if m.range < 1.0 {
                format!("a {} right here", m.category)
            } else {
                format!("a {} about {:.0} m {}", m.category, m.range, direction_words(m.bearing))
            }
        })
        .collect();
    text.push_str(" In view: ");
    text.push_str(&parts.join("; "));
    text.push('.');
    text
}

/// Objects within `range` and inside the view cone, in world order, as
/// `(index, bearing relative to view, range)`. No noise.
pub(crate) fn visible_objects(
    world: &SemanticWorld,
    position: Point,
    view_heading: f64,
    params: &ObservationParams,
) -> Vec<(usize, f64, f64)> {
    let half = params.fov() / 2.0;
    world
        .objects
        .iter()
        .enumerate()
        .filter_map(|(i, obj)| {
            let d = position.distance(obj.position);
            if d > params.range {
                return None;
            }
            if d < 1e-9 {
                return Some((i, 0.0, 0.0));
            }
            let rel = angle_diff(position.bearing_to(obj.position), view_heading);
            (rel.abs() <= half + 1e-12).then_some((i, rel, d))
        })
        .collect()
}

/// Describes what is visible from `pose` toward view `heading_index`.
pub fn observe(
    world: &SemanticWorld,
    pose: Pose,
    heading_index: usize,
    params: &ObservationParams,
    noise: &ObservationNoise,
) -> SceneDescription {
    let heading = params.view_heading(pose.heading, heading_index);
    observe_toward(world, pose, heading_index, heading, params, noise)
}

/// As [`observe`], with the view direction given explicitly.
pub(crate) fn observe_toward(
    world: &SemanticWorld,
    pose: Pose,
    heading_index: usize,
    heading: f64,
    params: &ObservationParams,
    noise: &ObservationNoise,
) -> SceneDescription {
    let position = pose.position;
    let mut rng = seed::rng(seed::mix(&[
        noise.seed,
        seed::coord(position.x),
        seed::coord(position.y),
        seed::coord(heading),
        heading_index as u64,
    ]));

    let mut mentions = Vec::new();
    for (i, bearing, range) in visible_objects(world, position, heading, params) {
        let dropped = rng.random::<f64>() < noise.p_drop;
        if !dropped {
            mentions.push(Mention { category: world.objects[i].category.clone(), bearing, range });
        }
    }
    if rng.random::<f64>() < noise.p_hallucinate {
        let categories = world.categories();
        if !categories.is_empty() {
            let half = params.fov() / 2.0;
            let category = categories[rng.random_range(0..categories.len())].to_string();
            let bearing = rng.random_range(-half..=half);
            let range = rng.random_range(params.range.min(2.0)..=params.range);
            mentions.push(Mention { category, bearing, range });
        }
    }
    mentions.sort_by(|a, b| a.range.total_cmp(&b.range).then_with(|| a.category.cmp(&b.category)));

    let region = world.region_at(position).map(str::to_string);
    let text = render_text(region.as_deref(), &mentions);
    SceneDescription {
        source_pose: pose,
        heading_index,
        heading,
        region,
        text,
        mentioned_objects: mentions,
        blocked: false,
    }
}
