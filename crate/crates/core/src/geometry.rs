//! Planar primitives: points, segments, simple polygons and polylines.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

const EPS: f64 = 1e-12;

/// A point (or vector) in world meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at `angle` radians, scaled by `length`.
    pub fn polar(angle: f64, length: f64) -> Self {
        Point::new(length * angle.cos(), length * angle.sin())
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Direction from `self` to `to`, in radians.
    pub fn bearing_to(self, to: Point) -> f64 {
        (to.y - self.y).atan2(to.x - self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Wraps any angle into `[0, 2π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Signed smallest difference `a - b`, wrapped into `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) - EPS && p.x <= a.x.max(b.x) + EPS && p.y >= a.y.min(b.y) - EPS && p.y <= a.y.max(b.y) + EPS
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orientation(q1, q2, p1);
    let d2 = orientation(q1, q2, p2);
    let d3 = orientation(p1, p2, q1);
    let d4 = orientation(p1, p2, q2);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS)) && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS)) {
        return true;
    }
    (d1.abs() <= EPS && on_segment(q1, q2, p1))
        || (d2.abs() <= EPS && on_segment(q1, q2, p2))
        || (d3.abs() <= EPS && on_segment(p1, p2, q1))
        || (d4.abs() <= EPS && on_segment(p1, p2, q2))
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 <= EPS {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl From<[f64; 4]> for Bounds {
    fn from([min_x, min_y, max_x, max_y]: [f64; 4]) -> Self {
        Bounds { min_x, min_y, max_x, max_y }
    }
}

impl From<Bounds> for [f64; 4] {
    fn from(b: Bounds) -> Self {
        [b.min_x, b.min_y, b.max_x, b.max_y]
    }
}

impl Bounds {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }
}

/// Closed polygon given by its vertices (the closing edge is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> Bounds {
        let mut b =
            Bounds { min_x: f64::INFINITY, min_y: f64::INFINITY, max_x: f64::NEG_INFINITY, max_y: f64::NEG_INFINITY };
        for v in &self.vertices {
            b.min_x = b.min_x.min(v.x);
            b.min_y = b.min_y.min(v.y);
            b.max_x = b.max_x.max(v.x);
            b.max_y = b.max_y.max(v.y);
        }
        b
    }

    /// Even-odd containment; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= 1e-9) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// At least three vertices and no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 || self.vertices.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            if edges[i].0.distance(edges[i].1) <= EPS {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    let u = other_i.sub(shared);
                    let w = other_j.sub(shared);
                    if u.cross(w).abs() <= EPS && u.dot(w) > 0.0 {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// True when the closed segment touches the polygon (crosses an edge or lies inside).
    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        let bb = self.bbox();
        if a.x.max(b.x) < bb.min_x || a.x.min(b.x) > bb.max_x || a.y.max(b.y) < bb.min_y || a.y.min(b.y) > bb.max_y {
            return false;
        }
        self.contains(a) || self.contains(b) || self.edges().any(|(p, q)| segments_intersect(a, b, p, q))
    }
}

/// Minimum distance from `p` to an open polyline.
pub fn polyline_distance(p: Point, polyline: &[Point]) -> f64 {
    match polyline {
        [] => f64::INFINITY,
        [only] => p.distance(*only),
        _ => polyline.windows(2).map(|w| point_segment_distance(p, w[0], w[1])).fold(f64::INFINITY, f64::min),
    }
}

pub fn polyline_length(polyline: &[Point]) -> f64 {
    polyline.windows(2).map(|w| w[0].distance(w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Polygon {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ])
    }

    #[test]
    fn normalize_wraps_into_range() {
        assert_eq!(normalize_angle(0.0), 0.0);
        assert!((normalize_angle(-std::f64::consts::FRAC_PI_2) - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!(normalize_angle(-1e-18) < TAU);
        assert!((normalize_angle(3.0 * TAU + 0.25) - 0.25).abs() < 1e-9);
    }

    #[test]
    fn angle_diff_is_signed_and_short() {
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((angle_diff(TAU - 0.1, 0.1) + 0.2).abs() < 1e-12);
    }

    #[test]
    fn square_contains_and_is_simple() {
        let sq = square(0.0, 0.0, 10.0);
        assert!(sq.is_simple());
        assert!(sq.contains(Point::new(5.0, 5.0)));
        assert!(sq.contains(Point::new(0.0, 5.0)));
        assert!(!sq.contains(Point::new(10.5, 5.0)));
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
        ]);
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn degenerate_polygons_are_rejected() {
        assert!(!Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)]).is_simple());
        let spike =
            Polygon::new(vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)]);
        assert!(!spike.is_simple());
    }

    #[test]
    fn segment_crossing_thin_wall() {
        let wall = Polygon::new(vec![
            Point::new(5.0, -10.0),
            Point::new(5.2, -10.0),
            Point::new(5.2, 10.0),
            Point::new(5.0, 10.0),
        ]);
        assert!(wall.intersects_segment(Point::new(0.0, 0.0), Point::new(10.0, 0.0)));
        assert!(!wall.intersects_segment(Point::new(0.0, 0.0), Point::new(4.0, 0.0)));
    }

    #[test]
    fn polyline_distance_uses_nearest_segment() {
        let line = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(10.0, 10.0)];
        assert!((polyline_distance(Point::new(5.0, 3.0), &line) - 3.0).abs() < 1e-12);
        assert!((polyline_distance(Point::new(12.0, 5.0), &line) - 2.0).abs() < 1e-12);
        assert!((polyline_length(&line) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn points_serialize_as_pairs() {
        let p = Point::new(1.5, -2.0);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[1.5,-2.0]");
        let back: Point = serde_json::from_str("[1.5,-2.0]").unwrap();
        assert_eq!(back, p);
    }
}
