//! The expanding topological graph: pathpoints the agent has committed to,
//! the open frontiers hanging off them, and the penalized argmax that picks
//! the next pathpoint.

use crate::geometry::{normalize_angle, Point};
use crate::world::{Pose, SceneDescription, SemanticWorld};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Values closer than this are treated as ties during selection.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FrontierError {
    #[error("frontier buffer is empty")]
    EmptyBuffer,
    #[error("frontier {0} is not open")]
    NotOpen(u64),
    #[error("frontier {0} has no score")]
    Unscored(u64),
    #[error("invalid frontier parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistancePenaltyParams {
    /// Sharpness, 1/m.
    pub k: f64,
    /// Distance at which the penalty is one half, m.
    pub d0: f64,
}

impl Default for DistancePenaltyParams {
    fn default() -> Self {
        DistancePenaltyParams { k: 0.5, d0: 15.0 }
    }
}

impl DistancePenaltyParams {
    pub fn validate(&self) -> Result<(), FrontierError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(FrontierError::InvalidParams("k must be positive"));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(FrontierError::InvalidParams("d0 must be positive"));
        }
        Ok(())
    }
}

/// Logistic distance penalty `1 / (1 + exp(-k (d - d0)))`.
pub fn sigmoid_penalty(d: f64, params: &DistancePenaltyParams) -> f64 {
    1.0 / (1.0 + (-params.k * (d - params.d0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    pub n: usize,
    pub edge_length: f64,
    pub dedup_radius: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams { n: 3, edge_length: 10.0, dedup_radius: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierNode {
    pub id: u64,
    pub position: Point,
    pub parent_pathpoint: u64,
    pub heading_index: usize,
    /// Absolute direction of the edge from the parent pathpoint.
    pub heading: f64,
    /// What the agent saw from the parent pathpoint toward this frontier.
    pub scene: SceneDescription,
    pub score_q: Option<f64>,
    pub distance_from_current: f64,
}

impl FrontierNode {
    /// Stores a normalized score, clamped into `[0, 1]`.
    pub fn set_score(&mut self, q: f64) {
        self.score_q = Some(q.clamp(0.0, 1.0));
    }
}

/// A committed waypoint on the traveled path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pathpoint {
    pub id: u64,
    pub position: Point,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierBuffer {
    open: Vec<FrontierNode>,
    committed: Vec<Pathpoint>,
    next_id: u64,
}

/// One open frontier as seen from the current pose during a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenFrontierView {
    pub id: u64,
    pub position: Point,
    pub parent_pathpoint: u64,
    pub score_q: Option<f64>,
    pub distance: f64,
    pub penalty: f64,
}

/// Graph state at one planning step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferSnapshot {
    pub step: usize,
    pub pose: Pose,
    pub committed: Vec<u64>,
    pub open: Vec<OpenFrontierView>,
    pub selected: Option<u64>,
}

impl FrontierBuffer {
    /// A buffer whose only pathpoint is the start pose (id 0).
    pub fn new(start: Pose) -> Self {
        FrontierBuffer {
            open: Vec::new(),
            committed: vec![Pathpoint { id: 0, position: start.position, heading: start.heading }],
            next_id: 1,
        }
    }

    pub fn open(&self) -> &[FrontierNode] {
        &self.open
    }

    pub fn open_mut(&mut self) -> &mut [FrontierNode] {
        &mut self.open
    }

    pub fn committed(&self) -> &[Pathpoint] {
        &self.committed
    }

    pub fn current(&self) -> &Pathpoint {
        self.committed.last().expect("buffer always holds the start pathpoint")
    }

    pub fn get(&self, id: u64) -> Option<&FrontierNode> {
        self.open.iter().find(|f| f.id == id)
    }

    fn too_close(&self, p: Point, radius: f64, batch: &[FrontierNode]) -> bool {
        self.open
            .iter()
            .map(|f| f.position)
            .chain(batch.iter().map(|f| f.position))
            .chain(self.committed.iter().map(|c| c.position))
            .any(|q| q.distance(p) < radius)
    }

    /// Expands up to `scenes.len()` frontiers from the current pathpoint at
    /// `pose`: view `i` yields a frontier `edge_length` along heading
    /// `pose.heading + 2πi/n`. Frontiers that leave the bounds, land in or
    /// cross an obstacle, or crowd an existing node are discarded. Returns
    /// the ids of the new open frontiers.
    pub fn expand(
        &mut self,
        world: &SemanticWorld,
        pose: Pose,
        scenes: Vec<SceneDescription>,
        params: &ExpansionParams,
    ) -> Vec<u64> {
        let n = scenes.len();
        let parent = self.current().id;
        let mut batch: Vec<FrontierNode> = Vec::with_capacity(n);
        for (i, scene) in scenes.into_iter().enumerate() {
            let heading = normalize_angle(pose.heading + TAU * i as f64 / n as f64);
            let position = pose.position.add(Point::polar(heading, params.edge_length));
            if !world.is_free(position) || !world.segment_clear(pose.position, position) {
                continue;
            }
            if self.too_close(position, params.dedup_radius, &batch) {
                continue;
            }
            batch.push(FrontierNode {
                id: 0,
                position,
                parent_pathpoint: parent,
                heading_index: i,
                heading,
                scene,
                score_q: None,
                distance_from_current: params.edge_length,
            });
        }
        let mut ids = Vec::with_capacity(batch.len());
        for mut node in batch {
            node.id = self.next_id;
            self.next_id += 1;
            ids.push(node.id);
            self.open.push(node);
        }
        ids
    }

    /// Recomputes every open frontier's euclidean distance from `from`.
    pub fn refresh_distances(&mut self, from: Point) {
        for f in &mut self.open {
            f.distance_from_current = f.position.distance(from);
        }
    }

    /// Moves an open frontier onto the traveled path.
    pub fn commit(&mut self, id: u64) -> Result<Pathpoint, FrontierError> {
        let idx = self.open.iter().position(|f| f.id == id).ok_or(FrontierError::NotOpen(id))?;
        let node = self.open.remove(idx);
        let p = Pathpoint { id: node.id, position: node.position, heading: node.heading };
        self.committed.push(p);
        Ok(p)
    }

    /// Overrides the heading of the newest pathpoint (the agent's arrival heading).
    pub fn set_current_heading(&mut self, heading: f64) {
        if let Some(last) = self.committed.last_mut() {
            last.heading = normalize_angle(heading);
        }
    }

    pub fn snapshot(
        &self,
        step: usize,
        pose: Pose,
        penalty: &DistancePenaltyParams,
        selected: Option<u64>,
    ) -> BufferSnapshot {
        BufferSnapshot {
            step,
            pose,
            committed: self.committed.iter().map(|c| c.id).collect(),
            open: self
                .open
                .iter()
                .map(|f| {
                    let distance = f.position.distance(pose.position);
                    OpenFrontierView {
                        id: f.id,
                        position: f.position,
                        parent_pathpoint: f.parent_pathpoint,
                        score_q: f.score_q,
                        distance,
                        penalty: sigmoid_penalty(distance, penalty),
                    }
                })
                .collect(),
            selected,
        }
    }
}

/// Picks the open frontier maximizing `score_q - σ(distance)`. Ties go to the
/// nearer frontier, then to the earlier-inserted one.
pub fn select_frontier<'b>(
    buffer: &'b FrontierBuffer,
    current: Point,
    params: &DistancePenaltyParams,
) -> Result<&'b FrontierNode, FrontierError> {
    let mut best: Option<(&FrontierNode, f64, f64)> = None;
    for f in buffer.open() {
        let q = f.score_q.ok_or(FrontierError::Unscored(f.id))?;
        let d = f.position.distance(current);
        let v = q - sigmoid_penalty(d, params);
        let better = match best {
            None => true,
            Some((_, bv, bd)) => v > bv + TIE_EPS || ((v - bv).abs() <= TIE_EPS && d < bd - 1e-9),
        };
        if better {
            best = Some((f, v, d));
        }
    }
    best.map(|(f, _, _)| f).ok_or(FrontierError::EmptyBuffer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bounds, Polygon};
    use crate::world::{observe, ObservationNoise, ObservationParams};
    use proptest::prelude::*;

    fn open_world() -> SemanticWorld {
        SemanticWorld::new(Bounds::from([-100.0, -100.0, 100.0, 100.0]), vec![], vec![], vec![]).unwrap()
    }

    fn scenes(world: &SemanticWorld, pose: Pose, n: usize) -> Vec<SceneDescription> {
        let params = ObservationParams { n_headings: n, ..Default::default() };
        (0..n).map(|i| observe(world, pose, i, &params, &ObservationNoise::none())).collect()
    }

    fn expand_at(buffer: &mut FrontierBuffer, world: &SemanticWorld, pose: Pose, n: usize) -> Vec<u64> {
        let s = scenes(world, pose, n);
        buffer.expand(world, pose, s, &ExpansionParams { n, ..Default::default() })
    }

    fn scored(buffer: &mut FrontierBuffer, scores: &[f64]) {
        for (f, q) in buffer.open_mut().iter_mut().zip(scores) {
            f.set_score(*q);
        }
    }

    #[test]
    fn sigmoid_is_half_at_d0() {
        for k in [0.1, 0.5, 3.0] {
            let p = DistancePenaltyParams { k, d0: 15.0 };
            assert!((sigmoid_penalty(15.0, &p) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_value_at_twelve() {
        let p = DistancePenaltyParams { k: 1.0, d0: 10.0 };
        assert!((sigmoid_penalty(12.0, &p) - 0.880797).abs() < 1e-6);
    }

    #[test]
    fn three_frontiers_in_open_field() {
        let w = open_world();
        let pose = Pose::new(Point::new(0.0, 0.0), 0.4);
        let mut buf = FrontierBuffer::new(pose);
        let ids = expand_at(&mut buf, &w, pose, 3);
        assert_eq!(ids.len(), 3);
        let fs = buf.open();
        for f in fs {
            assert!((f.position.distance(pose.position) - 10.0).abs() < 1e-9);
            let expected = pose.position.add(Point::polar(f.heading, 10.0));
            assert!(f.position.distance(expected) < 1e-12);
        }
        for i in 0..3 {
            let a = fs[i].heading;
            let b = fs[(i + 1) % 3].heading;
            assert!((crate::geometry::angle_diff(b, a).abs() - TAU / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn wall_ahead_discards_frontiers() {
        let wall = Polygon::new(vec![
            Point::new(5.0, -30.0),
            Point::new(6.0, -30.0),
            Point::new(6.0, 30.0),
            Point::new(5.0, 30.0),
        ]);
        let w = SemanticWorld::new(Bounds::from([-100.0, -100.0, 100.0, 100.0]), vec![], vec![], vec![wall.clone()])
            .unwrap();
        let pose = Pose::new(Point::new(0.0, 0.0), 0.0);
        let mut buf = FrontierBuffer::new(pose);
        let ids = expand_at(&mut buf, &w, pose, 3);
        assert!(ids.len() < 3);
        assert!(buf.open().iter().all(|f| !wall.contains(f.position)));
    }

    #[test]
    fn revisit_does_not_recreate_committed_points() {
        let w = open_world();
        let start = Pose::new(Point::new(0.0, 0.0), 0.0);
        let mut buf = FrontierBuffer::new(start);
        let ids = expand_at(&mut buf, &w, start, 3);
        let p = buf.commit(ids[0]).unwrap();
        // back at the first pathpoint facing the way we came: its frontier
        // toward the start would land on the start pathpoint
        let here = Pose::new(p.position, std::f64::consts::PI);
        let new = expand_at(&mut buf, &w, here, 3);
        for id in new {
            let f = buf.get(id).unwrap();
            assert!(f.position.distance(start.position) >= 3.0);
        }
    }

    #[test]
    fn nearer_frontier_wins_on_equal_scores() {
        let w = open_world();
        let mut buf = FrontierBuffer::new(Pose::new(Point::new(0.0, 0.0), 0.0));
        expand_at(&mut buf, &w, Pose::new(Point::new(0.0, 0.0), 0.0), 3);
        scored(&mut buf, &[0.5, 0.5, 0.5]);
        let current = Point::new(5.0, 0.0);
        let chosen = select_frontier(&buf, current, &Default::default()).unwrap();
        let nearest = buf
            .open()
            .iter()
            .min_by(|a, b| a.position.distance(current).total_cmp(&b.position.distance(current)))
            .unwrap();
        assert_eq!(chosen.id, nearest.id);
    }

    #[test]
    fn single_frontier_is_selected() {
        let w = open_world();
        let mut buf = FrontierBuffer::new(Pose::new(Point::new(0.0, 0.0), 0.0));
        expand_at(&mut buf, &w, Pose::new(Point::new(0.0, 0.0), 0.0), 2);
        let second = buf.open()[1].id;
        buf.commit(second).unwrap();
        scored(&mut buf, &[0.1]);
        assert_eq!(select_frontier(&buf, Point::new(0.0, 0.0), &Default::default()).unwrap().id, buf.open()[0].id);
    }

    #[test]
    fn commit_lifecycle_errors() {
        let w = open_world();
        let mut buf = FrontierBuffer::new(Pose::new(Point::new(0.0, 0.0), 0.0));
        let ids = expand_at(&mut buf, &w, Pose::new(Point::new(0.0, 0.0), 0.0), 2);
        buf.commit(ids[1]).unwrap();
        assert_eq!(buf.commit(ids[1]), Err(FrontierError::NotOpen(ids[1])));
        buf.commit(ids[0]).unwrap();
        assert!(buf.open().is_empty());
        assert_eq!(buf.committed().len(), 3);
        assert_eq!(
            select_frontier(&buf, Point::new(0.0, 0.0), &Default::default()).unwrap_err(),
            FrontierError::EmptyBuffer
        );
    }

    #[test]
    fn unscored_frontier_is_an_error() {
        let w = open_world();
        let mut buf = FrontierBuffer::new(Pose::new(Point::new(0.0, 0.0), 0.0));
        let ids = expand_at(&mut buf, &w, Pose::new(Point::new(0.0, 0.0), 0.0), 3);
        assert_eq!(
            select_frontier(&buf, Point::new(0.0, 0.0), &Default::default()).unwrap_err(),
            FrontierError::Unscored(ids[0])
        );
    }

    #[test]
    fn penalty_params_validate() {
        assert!(DistancePenaltyParams { k: 0.0, d0: 1.0 }.validate().is_err());
        assert!(DistancePenaltyParams { k: 1.0, d0: -1.0 }.validate().is_err());
        assert!(DistancePenaltyParams::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn sigmoid_strictly_increasing(a in 0.0f64..40.0, b in 0.0f64..40.0, k in 0.05f64..2.0, d0 in 1.0f64..30.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let p = DistancePenaltyParams { k, d0 };
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let (pl, ph) = (sigmoid_penalty(lo, &p), sigmoid_penalty(hi, &p));
            prop_assert!(pl <= ph);
            // strict wherever f64 can still resolve the difference
            if ph < 1.0 - 1e-9 && pl > 1e-9 && k * (hi - lo) > 1e-6 {
                prop_assert!(pl < ph);
            }
        }

        #[test]
        fn sigmoid_symmetry(x in -20.0f64..20.0, k in 0.05f64..2.0, d0 in 1.0f64..30.0) {
            let p = DistancePenaltyParams { k, d0 };
            prop_assert!((sigmoid_penalty(d0 - x, &p) + sigmoid_penalty(d0 + x, &p) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn selection_is_shift_invariant(
            scores in proptest::collection::vec(0.0f64..0.5, 3..4),
            shift in 0.0f64..0.5,
            cx in -10.0f64..10.0,
            cy in -10.0f64..10.0,
        ) {
            let w = open_world();
            let pose = Pose::new(Point::new(0.0, 0.0), 0.0);
            let mut a = FrontierBuffer::new(pose);
            expand_at(&mut a, &w, pose, 3);
            let mut b = a.clone();
            scored(&mut a, &scores);
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            scored(&mut b, &shifted);
            let c = Point::new(cx, cy);
            let pa = select_frontier(&a, c, &Default::default()).unwrap().id;
            let pb = select_frontier(&b, c, &Default::default()).unwrap().id;
            prop_assert_eq!(pa, pb);
        }

        #[test]
        fn equal_scores_pick_nearest(cx in -30.0f64..30.0, cy in -30.0f64..30.0, q in 0.0f64..1.0) {
            let w = open_world();
            let pose = Pose::new(Point::new(0.0, 0.0), 0.0);
            let mut buf = FrontierBuffer::new(pose);
            let ids = expand_at(&mut buf, &w, pose, 3);
            let p = buf.commit(ids[0]).unwrap();
            expand_at(&mut buf, &w, Pose::new(p.position, p.heading), 3);
            let n = buf.open().len();
            scored(&mut buf, &vec![q; n]);
            let c = Point::new(cx, cy);
            let chosen = select_frontier(&buf, c, &Default::default()).unwrap();
            let dmin = buf.open().iter().map(|f| f.position.distance(c)).fold(f64::INFINITY, f64::min);
            prop_assert!((chosen.position.distance(c) - dmin).abs() < 1e-6);
        }
    }
}
