//! Planar primitives shared by every stage: points, axis-aligned boxes,
//! convex quadrangles, boundary segments, and the overlap and distance
//! measures built on them.
//!
//! Coordinates are page pixels with the origin at the top-left corner and
//! `y` growing downwards.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::CharDetection;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(&self, other: &Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    fn cross(&self, other: &Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

/// Axis-aligned box `[x_left, y_top, x_right, y_bottom]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct AABox {
    pub x_left: f64,
    pub y_top: f64,
    pub x_right: f64,
    pub y_bottom: f64,
}

impl AABox {
    pub fn new(x_left: f64, y_top: f64, x_right: f64, y_bottom: f64) -> Result<Self> {
        let b = Self {
            x_left,
            y_top,
            x_right,
            y_bottom,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let c = [self.x_left, self.y_top, self.x_right, self.y_bottom];
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox(format!("non-finite coordinate in {c:?}")));
        }
        if self.x_left > self.x_right {
            return Err(Error::InvalidBox(format!(
                "x_left {} > x_right {}",
                self.x_left, self.x_right
            )));
        }
        if self.y_top > self.y_bottom {
            return Err(Error::InvalidBox(format!(
                "y_top {} > y_bottom {}",
                self.y_top, self.y_bottom
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn height(&self) -> f64 {
        self.y_bottom - self.y_top
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_left + self.x_right),
            0.5 * (self.y_top + self.y_bottom),
        )
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x_left: self.x_left + dx,
            y_top: self.y_top + dy,
            x_right: self.x_right + dx,
            y_bottom: self.y_bottom + dy,
        }
    }

    pub fn union(&self, other: &AABox) -> AABox {
        AABox {
            x_left: self.x_left.min(other.x_left),
            y_top: self.y_top.min(other.y_top),
            x_right: self.x_right.max(other.x_right),
            y_bottom: self.y_bottom.max(other.y_bottom),
        }
    }

    pub fn intersection_area(&self, other: &AABox) -> f64 {
        let w = self.x_right.min(other.x_right) - self.x_left.max(other.x_left);
        let h = self.y_bottom.min(other.y_bottom) - self.y_top.max(other.y_top);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_left && p.x <= self.x_right && p.y >= self.y_top && p.y <= self.y_bottom
    }

    pub fn to_quad(&self) -> Quad {
        Quad::from_aabox(self)
    }
}

impl From<AABox> for [f64; 4] {
    fn from(b: AABox) -> Self {
        [b.x_left, b.y_top, b.x_right, b.y_bottom]
    }
}

impl TryFrom<[f64; 4]> for AABox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        AABox::new(c[0], c[1], c[2], c[3])
    }
}

/// Convex quadrangle with counter-clockwise winding (positive shoelace area).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 2]; 4]", try_from = "[[f64; 2]; 4]")]
pub struct Quad {
    vertices: [Point; 4],
}

impl Quad {
    /// Builds a quad from four vertices in either winding order.
    ///
    /// The quad must be convex (collinear vertices are tolerated); the
    /// winding is normalized so the signed area is non-negative.
    pub fn new(vertices: [Point; 4]) -> Result<Self> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let mut v = vertices;
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        if !is_convex(&v) {
            return Err(Error::InvalidPolygon(format!(
                "quad is not convex: {vertices:?}"
            )));
        }
        Ok(Self { vertices: v })
    }

    pub fn from_aabox(b: &AABox) -> Self {
        let v = [
            Point::new(b.x_left, b.y_top),
            Point::new(b.x_right, b.y_top),
            Point::new(b.x_right, b.y_bottom),
            Point::new(b.x_left, b.y_bottom),
        ];
        // Degenerate boxes are still valid (zero-area) quads.
        Quad::new(v).unwrap_or(Quad { vertices: v })
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn bounding_box(&self) -> AABox {
        let xs = self.vertices.iter().map(|p| p.x);
        let ys = self.vertices.iter().map(|p| p.y);
        AABox {
            x_left: xs.clone().fold(f64::INFINITY, f64::min),
            x_right: xs.fold(f64::NEG_INFINITY, f64::max),
            y_top: ys.clone().fold(f64::INFINITY, f64::min),
            y_bottom: ys.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl From<Quad> for [[f64; 2]; 4] {
    fn from(q: Quad) -> Self {
        q.vertices.map(|p| [p.x, p.y])
    }
}

impl TryFrom<[[f64; 2]; 4]> for Quad {
    type Error = Error;

    fn try_from(v: [[f64; 2]; 4]) -> Result<Self> {
        Quad::new(v.map(|[x, y]| Point::new(x, y)))
    }
}

/// A boundary line given by its two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[[f64; 2]; 2]", try_from = "[[f64; 2]; 2]")]
pub struct LineSegment {
    pub p0: Point,
    pub p1: Point,
}

impl LineSegment {
    pub fn new(p0: Point, p1: Point) -> Result<Self> {
        if ![p0.x, p0.y, p1.x, p1.y].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite segment endpoint".into()));
        }
        if p0 == p1 {
            return Err(Error::InvalidPolygon(format!(
                "segment endpoints coincide at ({}, {})",
                p0.x, p0.y
            )));
        }
        Ok(Self { p0, p1 })
    }

    pub fn length(&self) -> f64 {
        self.p0.distance(&self.p1)
    }

    /// Angle of the segment direction in degrees, folded into `[0, 180)`.
    pub fn angle_deg(&self) -> f64 {
        let a = (self.p1.y - self.p0.y)
            .atan2(self.p1.x - self.p0.x)
            .to_degrees();
        a.rem_euclid(180.0)
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to_point(&self, p: &Point) -> f64 {
        let d = self.p1.sub(&self.p0);
        let len2 = d.x * d.x + d.y * d.y;
        let t = (((p.x - self.p0.x) * d.x + (p.y - self.p0.y) * d.y) / len2).clamp(0.0, 1.0);
        p.distance(&Point::new(self.p0.x + t * d.x, self.p0.y + t * d.y))
    }

    /// `x` where the infinite line through the segment crosses height `y`.
    /// `None` for horizontal segments.
    pub fn x_at(&self, y: f64) -> Option<f64> {
        let dy = self.p1.y - self.p0.y;
        if dy.abs() < EPS {
            return None;
        }
        Some(self.p0.x + (y - self.p0.y) * (self.p1.x - self.p0.x) / dy)
    }

    /// `y` where the infinite line through the segment crosses `x`.
    /// `None` for vertical segments.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let dx = self.p1.x - self.p0.x;
        if dx.abs() < EPS {
            return None;
        }
        Some(self.p0.y + (x - self.p0.x) * (self.p1.y - self.p0.y) / dx)
    }
}

impl From<LineSegment> for [[f64; 2]; 2] {
    fn from(s: LineSegment) -> Self {
        [[s.p0.x, s.p0.y], [s.p1.x, s.p1.y]]
    }
}

impl TryFrom<[[f64; 2]; 2]> for LineSegment {
    type Error = Error;

    fn try_from(v: [[f64; 2]; 2]) -> Result<Self> {
        LineSegment::new(Point::new(v[0][0], v[0][1]), Point::new(v[1][0], v[1][1]))
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| vertices[i].cross(&vertices[(i + 1) % n]))
        .sum();
    0.5 * twice
}

fn is_convex(vertices: &[Point]) -> bool {
    let n = vertices.len();
    let scale = vertices
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(1.0, f64::max);
    let tol = 1e-9 * scale * scale;
    let mut sign = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let z = b.sub(&a).cross(&c.sub(&b));
        if z.abs() <= tol {
            continue;
        }
        if sign == 0.0 {
            sign = z.signum();
        } else if z.signum() != sign {
            return false;
        }
    }
    true
}

pub fn iou_aabox(a: &AABox, b: &AABox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(vertices: &[Point]) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::InvalidPolygon(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        )));
    }
    Ok(signed_area(vertices).abs())
}

/// Sutherland-Hodgman clipping of `subject` against the convex polygon `clip`.
///
/// Returns the vertices of the intersection, or an empty list when the
/// intersection has no area.
pub fn clip_polygon(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    if subject.len() < 3 || clip.len() < 3 {
        return Vec::new();
    }
    let mut clip = clip.to_vec();
    if signed_area(&clip) < 0.0 {
        clip.reverse();
    }
    let mut output = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b.sub(&a);
        let side = |p: &Point| edge.cross(&p.sub(&a));
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let (s_cur, s_prev) = (side(&cur), side(&prev));
            if s_cur >= 0.0 {
                if s_prev < 0.0 {
                    output.push(intersect(prev, cur, s_prev, s_cur));
                }
                output.push(cur);
            } else if s_prev >= 0.0 {
                output.push(intersect(prev, cur, s_prev, s_cur));
            }
        }
    }
    if output.len() < 3 || signed_area(&output).abs() <= EPS {
        return Vec::new();
    }
    output
}

fn intersect(p: Point, q: Point, sp: f64, sq: f64) -> Point {
    let t = sp / (sp - sq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

pub fn iou_quad(a: &Quad, b: &Quad) -> f64 {
    let inter = clip_polygon(a.vertices(), b.vertices());
    let inter_area = if inter.is_empty() {
        0.0
    } else {
        signed_area(&inter).abs()
    };
    let union = a.area() + b.area() - inter_area;
    if union <= EPS {
        0.0
    } else {
        (inter_area / union).clamp(0.0, 1.0)
    }
}

/// Sum of endpoint distances under the better of the two endpoint pairings.
pub fn segment_pair_distance(a: &LineSegment, b: &LineSegment) -> f64 {
    let direct = a.p0.distance(&b.p0) + a.p1.distance(&b.p1);
    let swapped = a.p0.distance(&b.p1) + a.p1.distance(&b.p0);
    direct.min(swapped)
}

/// Ranking used by [`nms`]: score descending, then `(x_left, y_top)` ascending.
pub(crate) fn nms_rank(a: &CharDetection, b: &CharDetection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.bbox.x_left.total_cmp(&b.bbox.x_left))
        .then(a.bbox.y_top.total_cmp(&b.bbox.y_top))
}

/// Greedy class-agnostic non-maximum suppression.
///
/// A detection is dropped when its IoU with an already kept, higher ranked
/// detection exceeds `iou_threshold`. Survivors are returned in rank order.
pub fn nms(dets: &[CharDetection], iou_threshold: f64) -> Vec<CharDetection> {
    let mut ranked: Vec<&CharDetection> = dets.iter().collect();
    ranked.sort_by(|a, b| nms_rank(a, b));
    let mut kept: Vec<CharDetection> = Vec::with_capacity(ranked.len());
    for d in ranked {
        if kept
            .iter()
            .all(|k| iou_aabox(&k.bbox, &d.bbox) <= iou_threshold)
        {
            kept.push(d.clone());
        }
    }
    kept
}
