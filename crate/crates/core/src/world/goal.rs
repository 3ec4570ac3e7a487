//! Goal specifications for the four instruction levels and the machine
//! success oracle that judges them.

use super::{ObjectInstance, Pose, SemanticWorld, WorldError};
use crate::geometry::{polyline_distance, Point};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CORRIDOR_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCorridor {
    pub polyline: Vec<Point>,
    pub width: f64,
}

/// Level-specific goal content. The level is implied by the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GoalKind {
    /// Level 1: reach any instance of a category.
    Object { target_category: String },
    /// Level 2: reach an instance that sits near an instance of another category.
    Conditioned { target_category: String, condition_category: String, condition_radius: f64 },
    /// Level 3: reach an instance while keeping to a corridor.
    Path { target_category: String, corridor: PathCorridor },
    /// Level 4: reach anything offering an affordance.
    Affordance { affordance_tag: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub text: String,
    #[serde(flatten)]
    pub kind: GoalKind,
    pub success_radius: f64,
}

impl GoalSpec {
    pub fn level(&self) -> u8 {
        match self.kind {
            GoalKind::Object { .. } => 1,
            GoalKind::Conditioned { .. } => 2,
            GoalKind::Path { .. } => 3,
            GoalKind::Affordance { .. } => 4,
        }
    }

    pub fn target_category(&self) -> Option<&str> {
        match &self.kind {
            GoalKind::Object { target_category }
            | GoalKind::Conditioned { target_category, .. }
            | GoalKind::Path { target_category, .. } => Some(target_category),
            GoalKind::Affordance { .. } => None,
        }
    }

    pub fn corridor(&self) -> Option<&PathCorridor> {
        match &self.kind {
            GoalKind::Path { corridor, .. } => Some(corridor),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidGoal(m.to_string()));
        if !(self.success_radius > 0.0 && self.success_radius.is_finite()) {
            return bad("success_radius must be positive");
        }
        if self.text.trim().is_empty() {
            return bad("goal text is empty");
        }
        match &self.kind {
            GoalKind::Object { target_category } if target_category.is_empty() => bad("empty target category"),
            GoalKind::Conditioned { target_category, condition_category, condition_radius } => {
                if target_category.is_empty() || condition_category.is_empty() {
                    bad("empty category")
                } else if !(*condition_radius > 0.0) {
                    bad("condition_radius must be positive")
                } else {
                    Ok(())
                }
            }
            GoalKind::Path { target_category, corridor } => {
                if target_category.is_empty() {
                    bad("empty target category")
                } else if corridor.polyline.len() < 2 || !(corridor.width > 0.0) {
                    bad("corridor needs two or more vertices and a positive width")
                } else {
                    Ok(())
                }
            }
            GoalKind::Affordance { affordance_tag } if affordance_tag.is_empty() => bad("empty affordance tag"),
            _ => Ok(()),
        }
    }
}

/// Objects whose neighborhood satisfies the goal's location predicate.
/// The corridor of a level-3 goal is judged separately at episode level.
pub fn goal_sites<'w>(world: &'w SemanticWorld, goal: &GoalSpec) -> Vec<&'w ObjectInstance> {
    match &goal.kind {
        GoalKind::Object { target_category } | GoalKind::Path { target_category, .. } => {
            world.objects.iter().filter(|o| &o.category == target_category).collect()
        }
        GoalKind::Conditioned { target_category, condition_category, condition_radius } => world
            .objects
            .iter()
            .filter(|o| &o.category == target_category)
            .filter(|t| {
                world.objects.iter().any(|c| {
                    &c.category == condition_category
                        && c.id != t.id
                        && c.position.distance(t.position) <= *condition_radius
                })
            })
            .collect(),
        GoalKind::Affordance { affordance_tag } => {
            world.objects.iter().filter(|o| o.affordances.contains(affordance_tag)).collect()
        }
    }
}

/// Location oracle: is the pose within `success_radius` of a goal site?
pub fn check_goal_reached(world: &SemanticWorld, pose: Pose, goal: &GoalSpec) -> bool {
    goal_sites(world, goal).iter().any(|o| o.position.distance(pose.position) <= goal.success_radius)
}

/// Straight-line distance from `p` to the nearest point of any success disk.
pub fn distance_to_goal_region(world: &SemanticWorld, p: Point, goal: &GoalSpec) -> Option<f64> {
    goal_sites(world, goal)
        .iter()
        .map(|o| (o.position.distance(p) - goal.success_radius).max(0.0))
        .min_by(f64::total_cmp)
}

/// Whether a mention of `category` at `implied` would identify the goal.
///
/// Affordances are judged per category: a mentioned bench matches "sit" if
/// benches in this world afford sitting.
pub fn mention_matches_goal(world: &SemanticWorld, goal: &GoalSpec, category: &str, implied: Point) -> bool {
    match &goal.kind {
        GoalKind::Object { target_category } | GoalKind::Path { target_category, .. } => category == target_category,
        GoalKind::Conditioned { target_category, condition_category, condition_radius } => {
            category == target_category
                && world
                    .objects
                    .iter()
                    .any(|c| &c.category == condition_category && c.position.distance(implied) <= *condition_radius)
        }
        GoalKind::Affordance { affordance_tag } => {
            world.objects.iter().any(|o| o.category == category && o.affordances.contains(affordance_tag))
        }
    }
}

/// Fraction of trajectory points within `width / 2` of the corridor is at least `threshold`.
pub fn satisfies_path_constraint(trajectory: &[Pose], corridor: &PathCorridor, threshold: f64) -> bool {
    if trajectory.is_empty() {
        return false;
    }
    let half = corridor.width / 2.0;
    let inside = trajectory.iter().filter(|p| polyline_distance(p.position, &corridor.polyline) <= half + 1e-9).count();
    inside as f64 >= threshold * trajectory.len() as f64
}

/// Knobs for goal generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalParams {
    pub success_radius: f64,
    pub condition_radius: f64,
    pub corridor_width: f64,
    pub corridor_min_length: f64,
    pub corridor_max_length: f64,
}

impl Default for GoalParams {
    fn default() -> Self {
        GoalParams {
            // wider than the 10 m frontier lattice's covering radius (10/√3), so some
            // lattice point always lands inside a goal disk
            success_radius: 10.0,
            condition_radius: 10.0,
            corridor_width: 12.0,
            corridor_min_length: 25.0,
            corridor_max_length: 45.0,
        }
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}

/// Tries to lay a two-leg corridor ending at `target` through free space.
fn corridor_to(world: &SemanticWorld, target: Point, params: &GoalParams, rng: &mut impl Rng) -> Option<PathCorridor> {
    let margin = 2.0;
    for _ in 0..200 {
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let length = rng.random_range(params.corridor_min_length..=params.corridor_max_length);
        let start = target.add(Point::polar(angle, length));
        let b = &world.bounds;
        if start.x < b.min_x + margin
            || start.x > b.max_x - margin
            || start.y < b.min_y + margin
            || start.y > b.max_y - margin
        {
            continue;
        }
        let bend = rng.random_range(-0.15..=0.15) * length;
        let mid = start.add(target).scale(0.5).add(Point::polar(angle + std::f64::consts::FRAC_PI_2, bend));
        if world.is_free(start)
            && world.is_free(mid)
            && world.segment_clear(start, mid)
            && world.segment_clear(mid, target)
        {
            return Some(PathCorridor { polyline: vec![start, mid, target], width: params.corridor_width });
        }
    }
    None
}

/// Samples `count` achievable goals of one level. Output is a pure function of
/// `(world, level, count, seed, params)`, and the first `k` goals do not depend
/// on `count`.
pub fn generate_goals(
    world: &SemanticWorld,
    level: u8,
    count: usize,
    seed: u64,
    params: &GoalParams,
) -> Result<Vec<GoalSpec>, WorldError> {
    let mut rng = seed::rng(seed::mix(&[seed, level as u64]));
    let radius = params.success_radius;
    let goals: Vec<GoalSpec> = match level {
        1 => {
            let mut cats = world.categories();
            if cats.is_empty() {
                return Err(WorldError::NoCandidates(1));
            }
            cats.shuffle(&mut rng);
            (0..count)
                .map(|i| {
                    let c = cats[i % cats.len()];
                    GoalSpec {
                        text: format!("Navigate to {} {c}.", article(c)),
                        kind: GoalKind::Object { target_category: c.to_string() },
                        success_radius: radius,
                    }
                })
                .collect()
        }
        2 => {
            let cats = world.categories();
            let mut pairs = Vec::new();
            for t in &cats {
                for c in &cats {
                    if t == c {
                        continue;
                    }
                    let probe = GoalSpec {
                        text: "probe".into(),
                        kind: GoalKind::Conditioned {
                            target_category: t.to_string(),
                            condition_category: c.to_string(),
                            condition_radius: params.condition_radius,
                        },
                        success_radius: radius,
                    };
                    if !goal_sites(world, &probe).is_empty() {
                        pairs.push((*t, *c));
                    }
                }
            }
            if pairs.is_empty() {
                return Err(WorldError::NoCandidates(2));
            }
            pairs.shuffle(&mut rng);
            (0..count)
                .map(|i| {
                    let (t, c) = pairs[i % pairs.len()];
                    GoalSpec {
                        text: format!("Navigate to the {t} that is near {} {c}.", article(c)),
                        kind: GoalKind::Conditioned {
                            target_category: t.to_string(),
                            condition_category: c.to_string(),
                            condition_radius: params.condition_radius,
                        },
                        success_radius: radius,
                    }
                })
                .collect()
        }
        3 => {
            let mut cats = world.categories();
            cats.shuffle(&mut rng);
            let mut out = Vec::with_capacity(count);
            let mut i = 0usize;
            let mut misses = 0usize;
            while out.len() < count {
                if misses >= cats.len() {
                    break;
                }
                let c = cats[i % cats.len()];
                let mut goal_rng = seed::rng(seed::mix(&[seed, 3, i as u64]));
                let mut instances: Vec<&ObjectInstance> = world.objects.iter().filter(|o| o.category == c).collect();
                instances.shuffle(&mut goal_rng);
                let corridor = instances.iter().find_map(|o| corridor_to(world, o.position, params, &mut goal_rng));
                i += 1;
                match corridor {
                    Some(corridor) => {
                        misses = 0;
                        let via = world.region_at(corridor.polyline[1]).unwrap_or("open ground");
                        out.push(GoalSpec {
                            text: format!("Follow the path through the {via} to reach {} {c}.", article(c)),
                            kind: GoalKind::Path { target_category: c.to_string(), corridor },
                            success_radius: radius,
                        });
                    }
                    None => misses += 1,
                }
            }
            if out.is_empty() && count > 0 {
                return Err(WorldError::NoCandidates(3));
            }
            out
        }
        4 => {
            let mut tags = world.affordance_tags();
            if tags.is_empty() {
                return Err(WorldError::NoCandidates(4));
            }
            tags.shuffle(&mut rng);
            (0..count)
                .map(|i| {
                    let tag = tags[i % tags.len()];
                    GoalSpec {
                        text: format!("Find me somewhere to {tag}."),
                        kind: GoalKind::Affordance { affordance_tag: tag.to_string() },
                        success_radius: radius,
                    }
                })
                .collect()
        }
        other => return Err(WorldError::InvalidGoal(format!("level {other} is not in 1..=4"))),
    };
    for g in &goals {
        g.validate()?;
        if goal_sites(world, g).is_empty() {
            return Err(WorldError::NoCandidates(level));
        }
    }
    Ok(goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Polygon};
    use std::collections::BTreeSet;

    fn obj(id: &str, cat: &str, x: f64, y: f64, aff: &[&str]) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            category: cat.into(),
            position: Point::new(x, y),
            attributes: BTreeSet::new(),
            affordances: aff.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn small_world(objects: Vec<ObjectInstance>) -> SemanticWorld {
        SemanticWorld::new(Bounds::from([0.0, 0.0, 100.0, 100.0]), vec![], objects, vec![]).unwrap()
    }

    fn l1(cat: &str, r: f64) -> GoalSpec {
        GoalSpec {
            text: format!("Navigate to a {cat}."),
            kind: GoalKind::Object { target_category: cat.into() },
            success_radius: r,
        }
    }

    #[test]
    fn at_object_is_reached() {
        let w = small_world(vec![obj("b", "bench", 50.0, 50.0, &[])]);
        assert!(check_goal_reached(&w, Pose::new(Point::new(50.0, 50.0), 0.0), &l1("bench", 5.0)));
    }

    #[test]
    fn six_meters_out_is_not_reached() {
        let w = small_world(vec![obj("b", "bench", 50.0, 50.0, &[])]);
        assert!(!check_goal_reached(&w, Pose::new(Point::new(56.0, 50.0), 0.0), &l1("bench", 5.0)));
    }

    #[test]
    fn affordance_membership_counts() {
        let w = small_world(vec![obj("h", "hammock", 20.0, 20.0, &["sit", "nap"])]);
        let g = GoalSpec {
            text: "Find me somewhere to nap.".into(),
            kind: GoalKind::Affordance { affordance_tag: "nap".into() },
            success_radius: 5.0,
        };
        assert!(check_goal_reached(&w, Pose::new(Point::new(22.0, 21.0), 0.0), &g));
    }

    #[test]
    fn conditioned_goal_needs_nearby_condition() {
        let w = small_world(vec![
            obj("b1", "bench", 10.0, 10.0, &[]),
            obj("b2", "bench", 80.0, 80.0, &[]),
            obj("t", "tree", 85.0, 80.0, &[]),
        ]);
        let g = GoalSpec {
            text: "bench near a tree".into(),
            kind: GoalKind::Conditioned {
                target_category: "bench".into(),
                condition_category: "tree".into(),
                condition_radius: 10.0,
            },
            success_radius: 5.0,
        };
        assert!(!check_goal_reached(&w, Pose::new(Point::new(10.0, 10.0), 0.0), &g));
        assert!(check_goal_reached(&w, Pose::new(Point::new(80.0, 80.0), 0.0), &g));
        assert!(mention_matches_goal(&w, &g, "bench", Point::new(80.0, 79.0)));
        assert!(!mention_matches_goal(&w, &g, "bench", Point::new(10.0, 10.0)));
    }

    fn corridor() -> PathCorridor {
        PathCorridor { polyline: vec![Point::new(0.0, 0.0), Point::new(50.0, 0.0), Point::new(50.0, 50.0)], width: 4.0 }
    }

    #[test]
    fn trajectory_on_corridor_vertices_passes() {
        let c = corridor();
        let traj: Vec<Pose> = c.polyline.iter().map(|p| Pose::new(*p, 0.0)).collect();
        assert!(satisfies_path_constraint(&traj, &c, DEFAULT_CORRIDOR_THRESHOLD));
    }

    #[test]
    fn trajectory_outside_corridor_fails() {
        let traj: Vec<Pose> = (0..10).map(|i| Pose::new(Point::new(i as f64, 30.0), 0.0)).collect();
        assert!(!satisfies_path_constraint(&traj, &corridor(), DEFAULT_CORRIDOR_THRESHOLD));
    }

    #[test]
    fn seven_of_ten_inside_is_below_threshold() {
        let mut traj: Vec<Pose> = (0..7).map(|i| Pose::new(Point::new(i as f64 * 5.0, 1.0), 0.0)).collect();
        traj.extend((0..3).map(|i| Pose::new(Point::new(i as f64 * 5.0, 20.0), 0.0)));
        assert!(!satisfies_path_constraint(&traj, &corridor(), 0.8));
        assert!(satisfies_path_constraint(&traj, &corridor(), 0.7));
    }

    #[test]
    fn level_one_goals_use_distinct_categories() {
        let w = small_world(vec![obj("b", "bench", 10.0, 10.0, &[]), obj("t", "table", 20.0, 20.0, &["eat"])]);
        let goals = generate_goals(&w, 1, 2, 3, &GoalParams::default()).unwrap();
        assert_eq!(goals.len(), 2);
        assert_ne!(goals[0].target_category(), goals[1].target_category());
        assert!(goals.iter().all(|g| g.level() == 1));
    }

    #[test]
    fn level_four_without_tags_fails() {
        let w = small_world(vec![obj("b", "bench", 10.0, 10.0, &[])]);
        assert!(matches!(generate_goals(&w, 4, 1, 0, &GoalParams::default()), Err(WorldError::NoCandidates(4))));
    }

    #[test]
    fn generation_is_deterministic_and_prefix_stable() {
        let w = small_world(vec![
            obj("b", "bench", 10.0, 10.0, &["sit"]),
            obj("t", "table", 50.0, 50.0, &["eat"]),
            obj("tr", "tree", 55.0, 50.0, &["shade"]),
        ]);
        let p = GoalParams::default();
        for level in 1..=4 {
            let a = generate_goals(&w, level, 5, 42, &p).unwrap();
            let b = generate_goals(&w, level, 5, 42, &p).unwrap();
            assert_eq!(a, b);
            let short = generate_goals(&w, level, 2, 42, &p).unwrap();
            assert_eq!(&a[..2], &short[..]);
        }
    }

    #[test]
    fn level_three_corridor_ends_at_target() {
        let w = small_world(vec![obj("b", "bench", 50.0, 50.0, &[])]);
        let goals = generate_goals(&w, 3, 1, 9, &GoalParams::default()).unwrap();
        let c = goals[0].corridor().unwrap();
        assert_eq!(*c.polyline.last().unwrap(), Point::new(50.0, 50.0));
        assert!(c.polyline.iter().all(|p| w.is_free(*p)));
    }

    #[test]
    fn level_field_shape_is_enforced() {
        let mut g = l1("bench", 5.0);
        assert!(g.validate().is_ok());
        g.success_radius = 0.0;
        assert!(g.validate().is_err());
        let bad = GoalSpec {
            text: "x".into(),
            kind: GoalKind::Path {
                target_category: "bench".into(),
                corridor: PathCorridor { polyline: vec![], width: 1.0 },
            },
            success_radius: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn goal_json_carries_kind_tag() {
        let json = serde_json::to_string(&l1("bench", 5.0)).unwrap();
        assert!(json.contains("\"kind\":\"object\""));
        let back: GoalSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.level(), 1);
    }

    #[test]
    fn walled_obstacles_do_not_hide_sites() {
        let w = SemanticWorld::new(
            Bounds::from([0.0, 0.0, 100.0, 100.0]),
            vec![],
            vec![obj("b", "bench", 50.0, 50.0, &[])],
            vec![Polygon::new(vec![Point::new(0.0, 0.0), Point::new(5.0, 0.0), Point::new(5.0, 5.0)])],
        )
        .unwrap();
        assert_eq!(goal_sites(&w, &l1("bench", 5.0)).len(), 1);
    }
}
