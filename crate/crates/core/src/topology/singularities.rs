//! Cauchy-Green singularities: isotropic points `C = I` of the strain
//! tensor, found as common zeros of `c1 = C11 − C22` and `c2 = C12`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::delaunay::delaunay_edges;
use crate::cauchy_green::{eigen_decompose, SymTensor, SymmetricTensorField};
use crate::geometry::Point;
use crate::grid::bilinear;
use crate::par;

/// Above this many points nearest neighbours come from a Delaunay
/// triangulation instead of all pairs.
pub const EXHAUSTIVE_NN_LIMIT: usize = 1000;

/// Positions sampled on the classification circle.
pub const CLASSIFICATION_SAMPLES: usize = 1000;

/// Indicator magnitudes below this are treated as "no sign information".
const SIGN_DEADBAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularityType {
    Wedge,
    Trisector,
    Unclassified,
}

impl SingularityType {
    pub fn as_str(self) -> &'static str {
        match self {
            SingularityType::Wedge => "wedge",
            SingularityType::Trisector => "trisector",
            SingularityType::Unclassified => "unclassified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wedge" => Some(SingularityType::Wedge),
            "trisector" => Some(SingularityType::Trisector),
            "unclassified" => Some(SingularityType::Unclassified),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub position: Point,
    pub kind: SingularityType,
    /// Distance to the nearest other located singularity (∞ if alone).
    pub nearest_neighbor_distance: f64,
    /// Lower-left node `(i, j)` of the detecting cell.
    pub cell: (usize, usize),
}

/// Two wedges used to anchor a Poincaré section. Indices refer to the
/// singularity list passed to [`pair_wedges`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgePair {
    pub first: usize,
    pub second: usize,
    pub midpoint: Point,
    pub separation: f64,
}

/// Coefficients of `f(s, t) = a0 + a1 s + a2 t + a3 s t` through corner
/// values `[f00, f10, f01, f11]`.
#[inline]
fn bilinear_coeffs(f: [f64; 4]) -> [f64; 4] {
    [f[0], f[1] - f[0], f[2] - f[0], f[0] - f[1] - f[2] + f[3]]
}

#[inline]
fn eval(a: &[f64; 4], s: f64, t: f64) -> f64 {
    a[0] + a[1] * s + a[2] * t + a[3] * s * t
}

#[inline]
fn spans_zero(f: &[f64; 4]) -> bool {
    let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lo <= 0.0 && hi >= 0.0
}

/// Real roots of `q2 s² + q1 s + q0` (linear or constant cases included;
/// an identically zero polynomial yields no roots).
fn quadratic_roots(q2: f64, q1: f64, q0: f64) -> ([f64; 2], usize) {
    let scale = q2.abs().max(q1.abs()).max(q0.abs());
    if scale == 0.0 {
        return ([0.0; 2], 0);
    }
    if q2.abs() <= 1e-14 * scale {
        if q1.abs() <= 1e-14 * scale {
            return ([0.0; 2], 0);
        }
        return ([-q0 / q1, 0.0], 1);
    }
    let disc = q1 * q1 - 4.0 * q2 * q0;
    if disc < 0.0 {
        // tangential contact shows up as a slightly negative discriminant
        if disc > -1e-12 * q1 * q1 {
            return ([-q1 / (2.0 * q2), 0.0], 1);
        }
        return ([0.0; 2], 0);
    }
    let sq = libm::sqrt(disc);
    let q = -0.5 * (q1 + if q1 >= 0.0 { sq } else { -sq });
    let r1 = q / q2;
    let r2 = if q != 0.0 { q0 / q } else { r1 };
    ([r1, r2], 2)
}

/// Common zeros of two bilinear functions on the unit cell.
fn cell_zeros(f: [f64; 4], g: [f64; 4]) -> Vec<(f64, f64)> {
    let a = bilinear_coeffs(f);
    let b = bilinear_coeffs(g);
    // t·(a2 + a3 s) = −(a0 + a1 s), likewise for b; eliminating t:
    let q2 = a[1] * b[3] - b[1] * a[3];
    let q1 = a[0] * b[3] + a[1] * b[2] - b[0] * a[3] - b[1] * a[2];
    let q0 = a[0] * b[2] - b[0] * a[2];
    let (roots, n) = quadratic_roots(q2, q1, q0);
    let mut out = Vec::new();
    let tol = 1e-9;
    for &s in &roots[..n] {
        if !(-tol..=1.0 + tol).contains(&s) {
            continue;
        }
        let da = a[2] + a[3] * s;
        let db = b[2] + b[3] * s;
        let t = if da.abs() >= db.abs() {
            if da == 0.0 {
                continue;
            }
            -(a[0] + a[1] * s) / da
        } else {
            -(b[0] + b[1] * s) / db
        };
        if !(-tol..=1.0 + tol).contains(&t) {
            continue;
        }
        let (s, t) = newton_polish(&a, &b, s, t);
        // snap roundoff-level overshoot onto the cell edge so that edge
        // ownership stays unambiguous
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else if (v - 1.0).abs() < 1e-12 { 1.0 } else { v };
        let (s, t) = (snap(s), snap(t));
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            out.push((s, t));
        }
    }
    out
}

fn newton_polish(a: &[f64; 4], b: &[f64; 4], mut s: f64, mut t: f64) -> (f64, f64) {
    for _ in 0..8 {
        let fa = eval(a, s, t);
        let fb = eval(b, s, t);
        let (j11, j12) = (a[1] + a[3] * t, a[2] + a[3] * s);
        let (j21, j22) = (b[1] + b[3] * t, b[2] + b[3] * s);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let ds = (fa * j22 - fb * j12) / det;
        let dt = (j11 * fb - j21 * fa) / det;
        s -= ds;
        t -= dt;
        if ds.abs() < 1e-16 && dt.abs() < 1e-16 {
            break;
        }
    }
    (s, t)
}

#[inline]
fn indicators(c: &SymTensor) -> (f64, f64) {
    (c.c11 - c.c22, c.c12)
}

/// All points inside the grid where the bilinear interpolants of `c1` and
/// `c2` vanish together. Each cell owns its lower and left edges (upper and
/// right too on the last row/column), so points on shared edges appear once.
pub fn locate_singularities(tf: &SymmetricTensorField) -> Vec<Singularity> {
    let grid = tf.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let rows = par::map_range(ny - 1, |j| {
        let mut found = Vec::new();
        for i in 0..nx - 1 {
            let ids = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
            if ids.iter().any(|&k| !tf.valid[k]) {
                continue;
            }
            let vals = ids.map(|k| indicators(&tf.tensors[k]));
            let f = vals.map(|v| v.0);
            let g = vals.map(|v| v.1);
            if !spans_zero(&f) || !spans_zero(&g) {
                continue;
            }
            for (s, t) in cell_zeros(f, g) {
                let own_s = s < 1.0 || i == nx - 2;
                let own_t = t < 1.0 || j == ny - 2;
                if !(own_s && own_t) {
                    continue;
                }
                let p0 = grid.node(i, j);
                let position = Point::new(p0.x + s * grid.x.step, p0.y + t * grid.y.step);
                found.push(Singularity {
                    position,
                    kind: SingularityType::Unclassified,
                    nearest_neighbor_distance: f64::INFINITY,
                    cell: (i, j),
                });
            }
        }
        found
    });
    let mut all: Vec<Singularity> = rows.into_iter().flatten().collect();
    let pts: Vec<Point> = all.iter().map(|s| s.position).collect();
    for (s, (_, d)) in all.iter_mut().zip(nearest_neighbors(&pts)) {
        s.nearest_neighbor_distance = d;
    }
    all
}

/// Residuals `(|c1|, |c2|)` of the bilinear interpolants at a located
/// singularity.
pub fn singularity_residual(tf: &SymmetricTensorField, s: &Singularity) -> Option<(f64, f64)> {
    let (i, j) = s.cell;
    let ids = [tf.grid.index(i, j), tf.grid.index(i + 1, j), tf.grid.index(i, j + 1), tf.grid.index(i + 1, j + 1)];
    let vals = ids.map(|k| indicators(&tf.tensors[k]));
    let p0 = tf.grid.node(i, j);
    let st = ((s.position.x - p0.x) / tf.grid.x.step, (s.position.y - p0.y) / tf.grid.y.step);
    Some((bilinear(vals.map(|v| v.0), st.0, st.1).abs(), bilinear(vals.map(|v| v.1), st.0, st.1).abs()))
}

/// Line segments as endpoint pairs.
pub type Segments = Vec<(Point, Point)>;

/// Straight-segment approximation of the zero level sets of `c1` and `c2`
/// in each cell, for plotting.
pub fn zero_level_segments(tf: &SymmetricTensorField) -> (Segments, Segments) {
    let grid = tf.grid;
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for j in 0..grid.ny().saturating_sub(1) {
        for i in 0..grid.nx().saturating_sub(1) {
            let ids = [grid.index(i, j), grid.index(i + 1, j), grid.index(i + 1, j + 1), grid.index(i, j + 1)];
            if ids.iter().any(|&k| !tf.valid[k]) {
                continue;
            }
            let corners = [grid.node(i, j), grid.node(i + 1, j), grid.node(i + 1, j + 1), grid.node(i, j + 1)];
            let vals = ids.map(|k| indicators(&tf.tensors[k]));
            for (which, out) in [(0usize, &mut c1), (1, &mut c2)] {
                let v = vals.map(|p| if which == 0 { p.0 } else { p.1 });
                let mut hits = Vec::new();
                for e in 0..4 {
                    let (va, vb) = (v[e], v[(e + 1) % 4]);
                    if (va < 0.0) != (vb < 0.0) {
                        let s = va / (va - vb);
                        hits.push(corners[e] + s * (corners[(e + 1) % 4] - corners[e]));
                    }
                }
                if hits.len() >= 2 {
                    out.push((hits[0], hits[1]));
                }
                if hits.len() == 4 {
                    out.push((hits[2], hits[3]));
                }
            }
        }
    }
    (c1, c2)
}

/// Index and distance of each point's nearest other point; `(usize::MAX,
/// ∞)` when there is none.
pub fn nearest_neighbors(points: &[Point]) -> Vec<(usize, f64)> {
    let n = points.len();
    let mut best = alloc::vec![(usize::MAX, f64::INFINITY); n];
    let consider = |a: usize, b: usize, best: &mut Vec<(usize, f64)>| {
        let d = points[a].distance(points[b]);
        if d < best[a].1 || (d == best[a].1 && b < best[a].0) {
            best[a] = (b, d);
        }
        if d < best[b].1 || (d == best[b].1 && a < best[b].0) {
            best[b] = (a, d);
        }
    };
    if n <= EXHAUSTIVE_NN_LIMIT {
        for a in 0..n {
            for b in a + 1..n {
                consider(a, b, &mut best);
            }
        }
    } else {
        for (a, b) in delaunay_edges(points) {
            consider(a, b, &mut best);
        }
    }
    best
}

/// Drop every singularity whose nearest neighbour lies closer than
/// `2 Δx`; both members of a close pair go. Surviving entries keep their
/// nearest-neighbour distance from the full input set.
pub fn select_isolated(sings: &[Singularity], delta_x: f64) -> Vec<Singularity> {
    let pts: Vec<Point> = sings.iter().map(|s| s.position).collect();
    let nn = nearest_neighbors(&pts);
    sings
        .iter()
        .zip(nn)
        .filter(|(_, (_, d))| *d >= 2.0 * delta_x)
        .map(|(s, (_, d))| Singularity { nearest_neighbor_distance: d, ..*s })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("another singularity lies at distance {distance} inside the radius {radius}")]
    RadiusTooLarge { radius: f64, distance: f64 },
    #[error("circle sample {0} falls outside the valid tensor field")]
    SampleOutsideField(usize),
    #[error("tensor is isotropic at circle sample {0}")]
    DegenerateSample(usize),
}

/// Result of the trisector test, with counters for instrumentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub kind: SingularityType,
    pub samples_evaluated: usize,
    /// Sign changes of `r̂ · ξ2` around the circle.
    pub orthogonal_crossings: usize,
    /// Sign changes of `r̂ × ξ2` around the circle.
    pub parallel_crossings: usize,
}

/// Sign tracker with a deadband: values too small to trust keep the last
/// confident sign.
struct SignTrack {
    sign: i8,
    changes: usize,
}

impl SignTrack {
    fn new() -> Self {
        SignTrack { sign: 0, changes: 0 }
    }

    fn push(&mut self, v: f64) {
        if v.abs() <= SIGN_DEADBAND {
            return;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if self.sign != 0 && s != self.sign {
            self.changes += 1;
        }
        self.sign = s;
    }
}

/// Trisector test on a circle of radius `r` about `center`: ξ2 comes from
/// the bilinearly interpolated tensor at each of the
/// [`CLASSIFICATION_SAMPLES`] circle points, and the sign changes of
/// `r̂ · ξ2` (orthogonality) and `r̂ × ξ2` (parallelism) are counted.
/// Exactly three of each makes a trisector, anything else a wedge.
/// `others` are checked against the radius.
pub fn classify_singularity(
    tf: &SymmetricTensorField,
    center: Point,
    radius: f64,
    others: &[Point],
) -> Result<Classification, ClassifyError> {
    if let Some(d) = others.iter().map(|o| o.distance(center)).filter(|&d| d > 0.0).reduce(f64::min) {
        if d <= radius {
            return Err(ClassifyError::RadiusTooLarge { radius, distance: d });
        }
    }
    let n = CLASSIFICATION_SAMPLES;
    let mut dots = SignTrack::new();
    let mut crosses = SignTrack::new();
    let mut first: Option<(Point, Point)> = None;
    let mut prev = Point::ZERO;
    let mut evaluated = 0usize;
    for k in 0..n {
        let phi = TAU * (k as f64 + 0.5) / n as f64;
        let rhat = Point::from_angle(phi);
        let c = tf.interpolate(center + radius * rhat).ok_or(ClassifyError::SampleOutsideField(k))?;
        let e = eigen_decompose(&c).map_err(|_| ClassifyError::SampleOutsideField(k))?;
        evaluated += 1;
        if e.degenerate {
            return Err(ClassifyError::DegenerateSample(k));
        }
        let mut xi = e.xi2;
        if k > 0 && xi.dot(prev) < 0.0 {
            xi = -xi;
        }
        if first.is_none() {
            first = Some((rhat, xi));
        }
        dots.push(rhat.dot(xi));
        crosses.push(rhat.cross(xi));
        prev = xi;
    }
    // closing step: revisit the first sample with ξ2 aligned to the last
    if let Some((rhat, mut xi)) = first {
        if xi.dot(prev) < 0.0 {
            xi = -xi;
        }
        dots.push(rhat.dot(xi));
        crosses.push(rhat.cross(xi));
    }
    let kind = if dots.changes == 3 && crosses.changes == 3 { SingularityType::Trisector } else { SingularityType::Wedge };
    Ok(Classification {
        kind,
        samples_evaluated: evaluated,
        orthogonal_crossings: dots.changes,
        parallel_crossings: crosses.changes,
    })
}

/// Classification radius: half the nearest-neighbour distance, capped at
/// `5 Δx`. `None` when that falls below `2 Δx`.
pub fn classification_radius(nn_distance: f64, delta_x: f64) -> Option<f64> {
    let r = (0.5 * nn_distance).min(5.0 * delta_x);
    (r >= 2.0 * delta_x).then_some(r)
}

/// Classify every singularity in `sings`. Radii and intrusion checks use
/// `all`, the full located set, so discarded clusters still count as
/// neighbours. Failures leave the singularity `Unclassified`.
pub fn classify_all(tf: &SymmetricTensorField, sings: &[Singularity], all: &[Singularity]) -> Vec<Singularity> {
    let dx = tf.grid.spacing();
    let others: Vec<Point> = all.iter().map(|s| s.position).collect();
    par::map_range(sings.len(), |k| {
        let s = sings[k];
        let kind = classification_radius(s.nearest_neighbor_distance, dx)
            .and_then(|r| classify_singularity(tf, s.position, r, &others).ok())
            .map_or(SingularityType::Unclassified, |c| c.kind);
        Singularity { kind, ..s }
    })
}

/// Wedge pairs from classified singularities:
///
/// 1. wedges whose nearest singularity is a trisector are dropped,
/// 2. wedges with no other surviving wedge within `max_pair_distance`
///    are dropped,
/// 3. each remaining wedge is paired with its nearest remaining wedge;
///    mutual choices collapse to one pair.
///
/// Pairs are ordered by `(first, second)` with `first < second`.
pub fn pair_wedges(sings: &[Singularity], max_pair_distance: f64) -> Vec<WedgePair> {
    let pts: Vec<Point> = sings.iter().map(|s| s.position).collect();
    let nn = nearest_neighbors(&pts);
    let wedges: Vec<usize> = (0..sings.len())
        .filter(|&k| sings[k].kind == SingularityType::Wedge)
        .filter(|&k| nn[k].0 == usize::MAX || sings[nn[k].0].kind != SingularityType::Trisector)
        .collect();
    let nearest_among = |k: usize, set: &[usize]| -> Option<(usize, f64)> {
        set.iter()
            .filter(|&&o| o != k)
            .map(|&o| (o, pts[k].distance(pts[o])))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    };
    let kept: Vec<usize> = wedges
        .iter()
        .copied()
        .filter(|&k| nearest_among(k, &wedges).is_some_and(|(_, d)| d <= max_pair_distance))
        .collect();
    let mut pairs: Vec<(usize, usize)> = kept
        .iter()
        .filter_map(|&k| nearest_among(k, &kept).filter(|&(_, d)| d <= max_pair_distance).map(|(o, _)| (k.min(o), k.max(o))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .into_iter()
        .map(|(a, b)| WedgePair {
            first: a,
            second: b,
            midpoint: pts[a].midpoint(pts[b]),
            separation: pts[a].distance(pts[b]),
        })
        .collect()
}
