//! Planar convex hulls (monotone chain) with signed-distance queries.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on orientation tests, scaled by the squared magnitude
/// of the points involved.
pub const COLLINEARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl From<Complex64> for Point2 {
    fn from(z: Complex64) -> Self {
        Point2::new(z.re, z.im)
    }
}

/// `(a - o) x (b - o)`; positive for a left turn.
fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn turn_tol(points: &[Point2]) -> f64 {
    let m = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    COLLINEARITY_TOL * m * m
}

fn lex(a: &Point2, b: &Point2) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

fn segment_distance(a: Point2, b: Point2, p: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.sub(a).norm();
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.sub(Point2::new(a.x + t * ab.x, a.y + t * ab.y)).norm()
}

/// Convex polygon with vertices in counterclockwise order. May be empty, a
/// single point or a segment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HullPolygon {
    vertices: Vec<Point2>,
}

impl HullPolygon {
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let twice: f64 = (0..v.len())
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % v.len()]);
                a.x * b.y - a.y * b.x
            })
            .sum();
        0.5 * twice
    }

    /// Hull of the current vertices together with `points`.
    pub fn extended(&self, points: impl IntoIterator<Item = Point2>) -> HullPolygon {
        let mut all = self.vertices.clone();
        all.extend(points);
        convex_hull(&all)
    }

    /// Negative strictly inside, zero on the boundary (within tolerance),
    /// positive outside; the magnitude is the distance to the boundary.
    pub fn signed_distance(&self, p: Point2) -> Result<f64> {
        let v = &self.vertices;
        match v.len() {
            0 => Err(Error::EmptyHull),
            1 => Ok(p.sub(v[0]).norm()),
            2 => Ok(segment_distance(v[0], v[1], p)),
            n => {
                let scale = v.iter().map(|q| q.norm()).fold(p.norm().max(1.0), f64::max);
                let mut inside = true;
                let mut dist = f64::INFINITY;
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    if cross(a, b, p) < 0.0 {
                        inside = false;
                    }
                    dist = dist.min(segment_distance(a, b, p));
                }
                if dist <= COLLINEARITY_TOL * scale {
                    return Ok(0.0);
                }
                Ok(if inside { -dist } else { dist })
            }
        }
    }

    /// True iff the origin lies inside the hull at depth greater than `margin`.
    pub fn contains_origin(&self, margin: f64) -> bool {
        matches!(self.signed_distance(Point2::ORIGIN), Ok(d) if d < -margin)
    }
}

/// Andrew's monotone chain.
pub fn convex_hull(points: &[Point2]) -> HullPolygon {
    let mut pts: Vec<Point2> = points
        .iter()
        .copied()
        .filter(|p| p.x.is_finite() && p.y.is_finite())
        .collect();
    pts.sort_by(lex);
    pts.dedup();
    if pts.len() <= 1 {
        return HullPolygon { vertices: pts };
    }
    let tol = turn_tol(&pts);
    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    HullPolygon { vertices: lower }
}

pub fn signed_distance(hull: &HullPolygon, p: Point2) -> Result<f64> {
    hull.signed_distance(p)
}

pub fn contains_origin(hull: &HullPolygon, margin: f64) -> bool {
    hull.contains_origin(margin)
}
