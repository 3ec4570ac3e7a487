//! Obstacle-aware shortest path length to a goal region, for metrics only.
//!
//! Any-angle search (Theta*) over an 8-connected grid of cell centers. Edges
//! are accepted only when the straight segment is clear of every obstacle,
//! so the result is the length of a real, collision-free polyline. The final
//! leg is measured to the boundary of the nearest success disk instead of a
//! cell center.

use super::goal::goal_sites;
use super::{GoalSpec, Pose, SemanticWorld, WorldError};
use crate::geometry::Point;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub const GRID_RESOLUTION: f64 = 0.5;

#[derive(Clone, Copy)]
struct Entry {
    f: f64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, ties by node index
        other.f.total_cmp(&self.f).then_with(|| other.node.cmp(&self.node))
    }
}

struct Grid<'w> {
    world: &'w SemanticWorld,
    cols: usize,
    rows: usize,
    blocked: Vec<bool>,
    start: Point,
}

impl Grid<'_> {
    /// Node `cols * rows` is the exact start point.
    fn start_node(&self) -> usize {
        self.cols * self.rows
    }

    fn position(&self, node: usize) -> Point {
        if node == self.start_node() {
            return self.start;
        }
        let (c, r) = (node % self.cols, node / self.cols);
        let b = &self.world.bounds;
        Point::new(b.min_x + (c as f64 + 0.5) * GRID_RESOLUTION, b.min_y + (r as f64 + 0.5) * GRID_RESOLUTION)
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let b = &self.world.bounds;
        let c = (((p.x - b.min_x) / GRID_RESOLUTION).floor().max(0.0) as usize).min(self.cols - 1);
        let r = (((p.y - b.min_y) / GRID_RESOLUTION).floor().max(0.0) as usize).min(self.rows - 1);
        (c, r)
    }

    fn neighbors(&self, node: usize) -> Vec<usize> {
        let (c, r) =
            if node == self.start_node() { self.cell_of(self.start) } else { (node % self.cols, node / self.cols) };
        let mut out = Vec::with_capacity(9);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                if nc < 0 || nr < 0 || nc >= self.cols as i64 || nr >= self.rows as i64 {
                    continue;
                }
                let n = nr as usize * self.cols + nc as usize;
                if n != node && !self.blocked[n] {
                    out.push(n);
                }
            }
        }
        out
    }

    fn line_of_sight(&self, a: Point, b: Point) -> bool {
        self.world.segment_clear(a, b)
    }
}

/// Length of the shortest collision-free path from `start` into any success
/// disk of `goal`. Zero when `start` is already inside one.
pub fn shortest_path_length(world: &SemanticWorld, start: Pose, goal: &GoalSpec) -> Result<f64, WorldError> {
    let sites: Vec<Point> = goal_sites(world, goal).iter().map(|o| o.position).collect();
    let radius = goal.success_radius;
    let origin = start.position;
    let unreachable = || WorldError::UnreachableGoal { x: origin.x, y: origin.y };
    if sites.is_empty() || !world.is_free(origin) {
        return Err(unreachable());
    }
    if sites.iter().any(|s| s.distance(origin) <= radius) {
        return Ok(0.0);
    }

    let b = &world.bounds;
    let cols = ((b.width() / GRID_RESOLUTION).ceil() as usize).max(1);
    let rows = ((b.height() / GRID_RESOLUTION).ceil() as usize).max(1);
    let mut grid = Grid { world, cols, rows, blocked: vec![false; cols * rows], start: origin };
    for n in 0..cols * rows {
        grid.blocked[n] = !world.is_free(grid.position(n));
    }

    let heuristic = |p: Point| sites.iter().map(|s| (s.distance(p) - radius).max(0.0)).fold(f64::INFINITY, f64::min);
    // cheapest finish from `p` having already paid `g`
    let finish = |p: Point, g: f64| {
        sites
            .iter()
            .filter_map(|s| {
                let d = s.distance(p);
                if d <= radius {
                    return Some(g);
                }
                let entry = s.add(p.sub(*s).scale(radius / d));
                grid.line_of_sight(p, entry).then_some(g + d - radius)
            })
            .fold(f64::INFINITY, f64::min)
    };

    let total = cols * rows + 1;
    let mut g = vec![f64::INFINITY; total];
    let mut parent = vec![usize::MAX; total];
    let mut closed = vec![false; total];
    let mut heap = BinaryHeap::new();
    let s = grid.start_node();
    g[s] = 0.0;
    parent[s] = s;
    heap.push(Entry { f: heuristic(origin), node: s });
    let mut best = f64::INFINITY;

    while let Some(Entry { f, node }) = heap.pop() {
        if closed[node] {
            continue;
        }
        if f >= best {
            break;
        }
        closed[node] = true;
        let here = grid.position(node);
        let p = parent[node];
        best = best.min(finish(here, g[node]));
        if p != node {
            best = best.min(finish(grid.position(p), g[p]));
        }
        for n in grid.neighbors(node) {
            if closed[n] {
                continue;
            }
            let there = grid.position(n);
            let pp = grid.position(p);
            let (cand, via) = if grid.line_of_sight(pp, there) {
                (g[p] + pp.distance(there), p)
            } else if grid.line_of_sight(here, there) {
                (g[node] + here.distance(there), node)
            } else {
                continue;
            };
            if cand < g[n] {
                g[n] = cand;
                parent[n] = via;
                heap.push(Entry { f: cand + heuristic(there), node: n });
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(unreachable())
    }
}
