//! Motion between pathpoints.
//!
//! The agent moves in straight lines. When the direct segment to the chosen
//! frontier is blocked, it retraces the graph: a shortest route through the
//! visibility graph of already-visited pathpoints, which always exists because
//! every frontier was accepted with a clear segment from its parent.

use crate::geometry::Point;
use crate::world::{Pose, SemanticWorld};

/// Maximum spacing between consecutive trajectory samples, m.
pub const TRAJECTORY_SPACING: f64 = 1.0;

/// Waypoints from `from` to `to` (both included), via `via` when the direct
/// segment is blocked. Falls back to the direct segment if no clear route exists.
pub fn plan_route(world: &SemanticWorld, via: &[Point], from: Point, to: Point) -> Vec<Point> {
    if world.segment_clear(from, to) {
        return vec![from, to];
    }
    // nodes: 0 = from, 1..=via.len() = via, last = to
    let mut nodes = Vec::with_capacity(via.len() + 2);
    nodes.push(from);
    nodes.extend_from_slice(via);
    nodes.push(to);
    let target = nodes.len() - 1;
    let mut dist = vec![f64::INFINITY; nodes.len()];
    let mut prev = vec![usize::MAX; nodes.len()];
    let mut done = vec![false; nodes.len()];
    dist[0] = 0.0;
    while let Some(u) = (0..nodes.len())
        .filter(|&i| !done[i] && dist[i].is_finite())
        .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
    {
        if u == target {
            break;
        }
        done[u] = true;
        for v in 0..nodes.len() {
            if done[v] || v == u {
                continue;
            }
            let alt = dist[u] + nodes[u].distance(nodes[v]);
            if alt < dist[v] && world.segment_clear(nodes[u], nodes[v]) {
                dist[v] = alt;
                prev[v] = u;
            }
        }
    }
    if !dist[target].is_finite() {
        return vec![from, to];
    }
    let mut route = vec![target];
    while let Some(&last) = route.last() {
        if last == 0 {
            break;
        }
        route.push(prev[last]);
    }
    route.reverse();
    let mut points: Vec<Point> = route.into_iter().map(|i| nodes[i]).collect();
    points.dedup_by(|a, b| a.distance(*b) < 1e-9);
    points
}

/// Samples a route at most [`TRAJECTORY_SPACING`] apart, excluding the first
/// waypoint. Each sample faces along its leg.
pub fn sample_route(route: &[Point]) -> Vec<Pose> {
    let mut out = Vec::new();
    for leg in route.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let len = a.distance(b);
        if len < 1e-9 {
            continue;
        }
        let heading = a.bearing_to(b);
        let k = (len / TRAJECTORY_SPACING).ceil().max(1.0) as usize;
        for i in 1..=k {
            let t = i as f64 / k as f64;
            let p = if i == k { b } else { a.add(b.sub(a).scale(t)) };
            out.push(Pose::new(p, heading));
        }
    }
    out
}
