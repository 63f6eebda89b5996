//! Winding numbers of vector and line fields along closed curves.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use core::fmt;

use crate::geometry::Point;

const ROUNDING_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("vector field vanishes at sample {0}")]
    CriticalPointOnCurve(usize),
    #[error("line field is undefined at sample {0}")]
    DegeneratePointOnCurve(usize),
    #[error("direction turns by {increment} rad between samples {at} and {}", at + 1)]
    UndersampledCurve { at: usize, increment: f64 },
    #[error("need at least three samples, got {0}")]
    TooFewSamples(usize),
    #[error("winding sum {0} is not within rounding tolerance of an integer")]
    NotIntegral(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PolygonError {
    #[error("polygon needs at least three distinct vertices")]
    TooFewVertices,
    #[error("polygon has a non-finite vertex")]
    NonFinite,
    #[error("polygon encloses no area")]
    ZeroArea,
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

/// Multiple of ½, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);
    pub const HALF: HalfInteger = HalfInteger(1);
    pub const MINUS_HALF: HalfInteger = HalfInteger(-1);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInteger(twice)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Wrap an angle into `(−π, π]`.
#[inline]
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut w = a % TAU;
    if w > PI {
        w -= TAU;
    } else if w <= -PI {
        w += TAU;
    }
    w
}

/// Total turning of a cyclic sequence of angles, each increment wrapped.
fn total_turning(angles: &[f64], max_increment: f64) -> Result<f64, IndexError> {
    let n = angles.len();
    let mut sum = 0.0;
    for k in 0..n {
        let inc = wrap_angle(angles[(k + 1) % n] - angles[k]);
        if inc.abs() >= max_increment {
            return Err(IndexError::UndersampledCurve { at: k, increment: inc });
        }
        sum += inc;
    }
    Ok(sum)
}

fn round_turns(turns: f64) -> Result<i32, IndexError> {
    let r = libm::round(turns);
    if (turns - r).abs() >= ROUNDING_RESIDUAL {
        return Err(IndexError::NotIntegral(turns));
    }
    Ok(r as i32)
}

/// Index of a vector field from its values at consecutive points of an
/// anticlockwise closed curve (closing sample implied).
pub fn vector_field_index(samples: &[Point]) -> Result<i32, IndexError> {
    if samples.len() < 3 {
        return Err(IndexError::TooFewSamples(samples.len()));
    }
    let mut angles = Vec::with_capacity(samples.len());
    for (k, v) in samples.iter().enumerate() {
        if !(v.norm_sq() > 0.0) || !v.is_finite() {
            return Err(IndexError::CriticalPointOnCurve(k));
        }
        angles.push(v.angle());
    }
    round_turns(total_turning(&angles, FRAC_PI_2)? / TAU)
}

/// Index of a line field, each sample a (not necessarily unit) vector
/// spanning the line. Angles are doubled so that `v` and `−v` coincide,
/// the winding of the doubled field is taken and halved.
pub fn line_field_index(samples: &[Point]) -> Result<HalfInteger, IndexError> {
    if samples.len() < 3 {
        return Err(IndexError::TooFewSamples(samples.len()));
    }
    let mut doubled = Vec::with_capacity(samples.len());
    for (k, v) in samples.iter().enumerate() {
        if !(v.norm_sq() > 0.0) || !v.is_finite() {
            return Err(IndexError::DegeneratePointOnCurve(k));
        }
        doubled.push(2.0 * v.angle());
    }
    // line angles must move by less than π/4, i.e. doubled by less than π/2
    let turns = total_turning(&doubled, 2.0 * FRAC_PI_4)? / TAU;
    Ok(HalfInteger(round_turns(turns)?))
}

/// Simple polygon with anticlockwise vertex order; the closing edge from
/// the last vertex back to the first is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedPolygon {
    vertices: Vec<Point>,
}

impl ClosedPolygon {
    /// Validate and orient. A repeated closing vertex is dropped; clockwise
    /// input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, PolygonError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(PolygonError::NonFinite);
        }
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices);
        }
        let area = signed_area(&vertices);
        if area == 0.0 && vertices.windows(3).all(|w| orient(w[0], w[1], w[2]) == 0.0) {
            return Err(PolygonError::ZeroArea);
        }
        if let Some((a, b)) = first_crossing(&vertices) {
            return Err(PolygonError::SelfIntersecting(a, b));
        }
        if area == 0.0 {
            return Err(PolygonError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(ClosedPolygon { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Positive by construction.
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (a, b) in self.edges() {
            let w = a.cross(b);
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        let k = 1.0 / (6.0 * self.area());
        Point::new(cx * k, cy * k)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Ray-casting inclusion test; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(a, b, p) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Points along the boundary, anticlockwise, no two consecutive more than
    /// `max_spacing` apart. Every vertex is included.
    pub fn densify(&self, max_spacing: f64) -> Vec<Point> {
        let mut out = Vec::new();
        for (a, b) in self.edges() {
            let n = libm::ceil(a.distance(b) / max_spacing).max(1.0) as usize;
            for k in 0..n {
                let s = k as f64 / n as f64;
                out.push(a + s * (b - a));
            }
        }
        out
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|k| v[k].cross(v[(k + 1) % n])).sum::<f64>()
}

#[inline]
fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    orient(a, b, p) == 0.0
        && p.x >= a.x.min(b.x)
        && p.x <= a.x.max(b.x)
        && p.y >= a.y.min(b.y)
        && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// First pair of non-adjacent edges that touch, if any. Edge `k` runs from
/// vertex `k` to `k + 1`. Edges are bucketed by x-extent and swept so the
/// common case stays well below quadratic.
fn first_crossing(v: &[Point]) -> Option<(usize, usize)> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |k: usize| v[k].x.min(v[(k + 1) % n].x);
    let hi = |k: usize| v[k].x.max(v[(k + 1) % n].x);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)));
    let mut active: Vec<usize> = Vec::new();
    let mut found: Option<(usize, usize)> = None;
    for &e in &order {
        let x = lo(e);
        active.retain(|&a| hi(a) >= x);
        for &a in &active {
            let adjacent = (a + 1) % n == e || (e + 1) % n == a;
            if adjacent {
                continue;
            }
            let (p, q) = (v[a], v[(a + 1) % n]);
            let (r, s) = (v[e], v[(e + 1) % n]);
            if p.y.max(q.y) < r.y.min(s.y) || r.y.max(s.y) < p.y.min(q.y) {
                continue;
            }
            if segments_intersect(p, q, r, s) {
                let pair = (a.min(e), a.max(e));
                found = Some(found.map_or(pair, |f| f.min(pair)));
            }
        }
        active.push(e);
    }
    found
}

/// Wedge and trisector counts inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Census {
    pub wedges: usize,
    pub trisectors: usize,
    /// Enclosed singularities whose type could not be determined.
    pub unclassified: usize,
}

impl Census {
    /// Index sum `(W − T)/2` predicted for a closed line-field orbit.
    pub fn satisfies_index_balance(&self) -> bool {
        self.unclassified == 0 && self.wedges == self.trisectors + 2
    }

    pub fn total(&self) -> usize {
        self.wedges + self.trisectors + self.unclassified
    }
}

/// Count classified singularities inside `gamma` (boundary inclusive).
pub fn census_enclosed(gamma: &ClosedPolygon, sings: &[super::Singularity]) -> Census {
    let mut c = Census::default();
    for s in sings.iter().filter(|s| gamma.contains(s.position)) {
        match s.kind {
            super::SingularityType::Wedge => c.wedges += 1,
            super::SingularityType::Trisector => c.trisectors += 1,
            super::SingularityType::Unclassified => c.unclassified += 1,
        }
    }
    c
}
