//! Exact 2-D primitives: vectors, segments, polygons, ray casting and swept-disc contact.
//!
//! Everything is `f64`. Parallelism and degeneracy tests use [`EPS`].

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for parallelism and degeneracy decisions.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

/// A point or a velocity in the plane. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2 { x, y }
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or zero for a (near) zero vector.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > EPS {
            self / n
        } else {
            Vec2::ZERO
        }
    }

    /// Scales the vector down so its length is at most `max_len`.
    pub fn clamp_norm(self, max_len: f64) -> Vec2 {
        let n_sq = self.norm_sq();
        if n_sq > max_len * max_len {
            self * (max_len / n_sq.sqrt())
        } else {
            self
        }
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub const fn new(a: Vec2, b: Vec2) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn closest_point(&self, p: Vec2) -> Vec2 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq <= EPS * EPS {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0);
        self.a + d * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

/// A simple polygon stored counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<Vec2>")]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl From<Polygon> for Vec<Vec2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Vec2>::deserialize(de)?;
        Polygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

impl Polygon {
    /// Validates the vertex loop and reorders it counter-clockwise if needed.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let ei = Segment::new(vertices[i], vertices[(i + 1) % n]);
                let ej = Segment::new(vertices[j], vertices[(j + 1) % n]);
                if seg_intersect(&ei, &ej).is_some() {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS {
            return Err(GeometryError::Degenerate);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle from two corners.
    pub fn rect(min: Vec2, max: Vec2) -> Self {
        Polygon::new(vec![
            min,
            Vec2::new(max.x, min.y),
            max,
            Vec2::new(min.x, max.y),
        ])
        .expect("non-degenerate rectangle")
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Even-odd point containment. Points on the boundary may go either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges()
            .map(|e| point_seg_distance(p, &e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the filled polygon (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

/// Intersection of two closed segments.
///
/// For collinear overlap the overlap point nearest `s1.a` is returned.
pub fn seg_intersect(s1: &Segment, s2: &Segment) -> Option<Vec2> {
    let r = s1.b - s1.a;
    let s = s2.b - s2.a;
    let qp = s2.a - s1.a;
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();

    if denom.abs() > EPS * scale.max(EPS) {
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let tol = EPS;
        if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
            return Some(s1.a + r * t.clamp(0.0, 1.0));
        }
        return None;
    }

    // parallel: only collinear configurations can touch
    if qp.cross(r).abs() > EPS * r.norm().max(1.0) || qp.cross(s).abs() > EPS * s.norm().max(1.0) {
        return None;
    }
    let r_len_sq = r.norm_sq();
    if r_len_sq <= EPS * EPS {
        // s1 is a point
        return (point_seg_distance(s1.a, s2) <= EPS).then_some(s1.a);
    }
    // project s2 onto s1's parameter line
    let t0 = (s2.a - s1.a).dot(r) / r_len_sq;
    let t1 = (s2.b - s1.a).dot(r) / r_len_sq;
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let start = lo.max(0.0);
    let end = hi.min(1.0);
    if start <= end + EPS {
        Some(s1.a + r * start.min(1.0))
    } else {
        None
    }
}

pub fn point_seg_distance(p: Vec2, s: &Segment) -> f64 {
    p.distance(s.closest_point(p))
}

/// Minimum distance between two closed segments.
pub fn seg_seg_distance(s1: &Segment, s2: &Segment) -> f64 {
    if seg_intersect(s1, s2).is_some() {
        return 0.0;
    }
    point_seg_distance(s1.a, s2)
        .min(point_seg_distance(s1.b, s2))
        .min(point_seg_distance(s2.a, s1))
        .min(point_seg_distance(s2.b, s1))
}

/// Ray parameter of the first hit against a segment, if any.
pub fn ray_segment(origin: Vec2, dir: Vec2, s: &Segment) -> Option<f64> {
    let e = s.b - s.a;
    let denom = dir.cross(e);
    let w = s.a - origin;
    if denom.abs() <= EPS * e.norm().max(EPS) {
        // parallel: hit only if collinear, then at the nearer endpoint ahead
        if w.cross(dir).abs() > EPS * e.norm().max(1.0) {
            return None;
        }
        let ta = (s.a - origin).dot(dir);
        let tb = (s.b - origin).dot(dir);
        if ta < 0.0 && tb < 0.0 {
            return None;
        }
        if ta.signum() != tb.signum() {
            return Some(0.0);
        }
        return Some(ta.min(tb));
    }
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    if t >= 0.0 && (-EPS..=1.0 + EPS).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Ray parameter of the first hit against a circle boundary (0 if the origin is inside).
pub fn ray_circle(origin: Vec2, dir: Vec2, c: &Circle) -> Option<f64> {
    let m = origin - c.center;
    let cterm = m.norm_sq() - c.radius * c.radius;
    if cterm <= 0.0 {
        return Some(0.0);
    }
    let b = m.dot(dir);
    if b > 0.0 {
        return None;
    }
    let disc = b * b - cterm;
    if disc < 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayTarget {
    Obstacle(usize),
    Disc(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub target: Option<RayTarget>,
}

/// Casts a unit-direction ray and reports the nearest surface and its owner.
///
/// `inside_obstacle` short-circuits the cast: a ray starting inside a polygon
/// reports distance 0 against it.
pub fn raycast_hit(
    origin: Vec2,
    dir: Vec2,
    obstacles: &[Polygon],
    discs: &[Circle],
    max_range: f64,
) -> RayHit {
    let mut best = RayHit {
        distance: max_range,
        target: None,
    };
    for (i, poly) in obstacles.iter().enumerate() {
        if poly.contains(origin) {
            return RayHit {
                distance: 0.0,
                target: Some(RayTarget::Obstacle(i)),
            };
        }
        for edge in poly.edges() {
            if let Some(t) = ray_segment(origin, dir, &edge) {
                if t < best.distance {
                    best = RayHit {
                        distance: t,
                        target: Some(RayTarget::Obstacle(i)),
                    };
                }
            }
        }
    }
    for (i, c) in discs.iter().enumerate() {
        if let Some(t) = ray_circle(origin, dir, c) {
            if t < best.distance {
                best = RayHit {
                    distance: t,
                    target: Some(RayTarget::Disc(i)),
                };
            }
        }
    }
    best
}

/// Distance from `origin` along `angle` to the first polygon edge or disc boundary,
/// clamped to `max_range`.
pub fn raycast(
    origin: Vec2,
    angle: f64,
    obstacles: &[Polygon],
    discs: &[Circle],
    max_range: f64,
) -> f64 {
    raycast_hit(origin, Vec2::from_angle(angle), obstacles, discs, max_range).distance
}

/// Smallest `t` in `[0, 1]` at which a disc of `radius` centered at
/// `lerp(center0, center1, t)` touches the closed `edge`.
///
/// Solved exactly: one quadratic per edge endpoint plus the linear contact
/// against the edge's supporting line restricted to its interior.
pub fn swept_circle_vs_segment(
    center0: Vec2,
    center1: Vec2,
    radius: f64,
    edge: &Segment,
) -> Option<f64> {
    if point_seg_distance(center0, edge) <= radius {
        return Some(0.0);
    }
    let motion = center1 - center0;
    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if (0.0..=1.0).contains(&t) && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    // endpoint caps: |center0 + motion t - p|^2 = r^2
    for p in [edge.a, edge.b] {
        if let Some(t) = first_root_within(center0 - p, motion, radius) {
            consider(t);
        }
    }

    // interior: signed distance to the supporting line reaches +/- r
    let e = edge.b - edge.a;
    let len = e.norm();
    if len > EPS {
        let n = e.perp() / len;
        let d0 = (center0 - edge.a).dot(n);
        let dv = motion.dot(n);
        if dv.abs() > EPS {
            let target = if d0 > 0.0 { radius } else { -radius };
            let t = (target - d0) / dv;
            if t >= 0.0 {
                let foot = center0 + motion * t;
                let u = (foot - edge.a).dot(e) / (len * len);
                if (0.0..=1.0).contains(&u) {
                    consider(t);
                }
            }
        }
    }
    best
}

/// Smallest non-negative root of `|rel + vel t| = r` given `|rel| > r`.
fn first_root_within(rel: Vec2, vel: Vec2, r: f64) -> Option<f64> {
    let a = vel.norm_sq();
    if a <= EPS * EPS {
        return None;
    }
    let b = rel.dot(vel);
    let c = rel.norm_sq() - r * r;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    (t >= 0.0).then_some(t)
}
