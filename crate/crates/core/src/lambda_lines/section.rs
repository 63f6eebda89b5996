//! Poincaré sections and the first-return map of λ-lines.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use super::eta::LineField;
use super::integrate::{integrate_with, rk4_step, HaltReason, LineIntegration, Step};
use crate::geometry::{Bounds, Point};
use crate::par;

/// Bisection stops once the bracket is this fraction of the section length.
pub const BISECTION_TOLERANCE: f64 = 1e-6;
pub const MAX_BISECTION_STEPS: usize = 50;
/// An orbit counts as closed when it returns this fraction of the section
/// length from where it started.
pub const CLOSURE_TOLERANCE: f64 = 1e-3;

/// Horizontal segment from `anchor` towards `+x`, seeded uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSection {
    pub anchor: Point,
    pub endpoint: Point,
    pub seeds: Vec<Point>,
    /// Set when the requested length was cut back to stay in the domain.
    pub truncated: bool,
}

impl PoincareSection {
    pub fn length(&self) -> f64 {
        self.endpoint.x - self.anchor.x
    }

    /// Arc coordinate of a point on the section's supporting line.
    #[inline]
    pub fn coordinate(&self, p: Point) -> f64 {
        p.x - self.anchor.x
    }

    pub fn point_at(&self, coordinate: f64) -> Point {
        Point::new(self.anchor.x + coordinate, self.anchor.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SectionError {
    #[error("section anchor {0:?} is outside the domain")]
    AnchorOutsideDomain(Point),
    #[error("a section needs at least two seeds")]
    TooFewSeeds,
    #[error("section length must be positive")]
    BadLength,
}

/// `n_seeds` equally spaced seeds from `anchor` to `anchor + (length, 0)`;
/// the segment is cut at the domain edge if it would leave it.
pub fn build_section(anchor: Point, length: f64, n_seeds: usize, domain: Option<Bounds>) -> Result<PoincareSection, SectionError> {
    if n_seeds < 2 {
        return Err(SectionError::TooFewSeeds);
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(SectionError::BadLength);
    }
    let mut len = length;
    let mut truncated = false;
    if let Some(b) = domain {
        if !b.contains(anchor) {
            return Err(SectionError::AnchorOutsideDomain(anchor));
        }
        if anchor.x + len > b.x_max {
            len = b.x_max - anchor.x;
            truncated = true;
        }
        if !(len > 0.0) {
            return Err(SectionError::BadLength);
        }
    }
    let seeds = (0..n_seeds).map(|k| Point::new(anchor.x + len * k as f64 / (n_seeds - 1) as f64, anchor.y)).collect();
    Ok(PoincareSection { anchor, endpoint: Point::new(anchor.x + len, anchor.y), seeds, truncated })
}

/// A λ-line that came back to the section.
#[derive(Debug, Clone, PartialEq)]
pub struct Return {
    pub seed_coordinate: f64,
    /// `P(x) − x` in section coordinates.
    pub distance: f64,
    /// Vertices from the seed up to and including the return point.
    pub orbit: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("λ-line did not return to the section ({0:?})")]
pub struct NoReturn(pub HaltReason);

/// Integrate from the section point at `coordinate`, starting towards `+y`,
/// until the line next crosses the section's supporting segment upward.
pub fn return_from<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    coordinate: f64,
    cfg: &LineIntegration,
) -> Result<Return, NoReturn> {
    let seed = section.point_at(coordinate);
    let y0 = section.anchor.y;
    let len = section.length();
    let mut hit: Option<Point> = None;
    let line = integrate_with(field, seed, Point::new(0.0, 1.0), cfg, |st| {
        if st.from.y < y0 && st.to.y >= y0 {
            let p = refine_crossing(field, st, y0);
            let c = section.coordinate(p);
            if (0.0..=len).contains(&c) {
                hit = Some(Point::new(p.x, y0));
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    });
    match hit {
        Some(p) => {
            let mut orbit = line.points;
            // replace the overshooting last vertex by the crossing point
            orbit.pop();
            orbit.push(p);
            Ok(Return { seed_coordinate: coordinate, distance: section.coordinate(p) - coordinate, orbit })
        }
        None => Err(NoReturn(line.halt)),
    }
}

/// Point where the RK4 step crosses `y = y0`, found by regula falsi
/// (Illinois variant) on the partial step length. Keeps the crossing as
/// accurate as the integrator rather than the chord.
fn refine_crossing<L: LineField + ?Sized>(field: &L, st: &Step, y0: f64) -> Point {
    let chord = |a: Point, b: Point| Point::new(a.x + (y0 - a.y) / (b.y - a.y) * (b.x - a.x), y0);
    let at = |h: f64| rk4_step(field, st.from, st.orientation, h, false).ok().map(|(p, _)| p);
    let (mut lo, mut flo) = (0.0, st.from.y - y0);
    let (mut hi, mut fhi) = (st.length, st.to.y - y0);
    let mut best = chord(st.from, st.to);
    let mut side = 0i8;
    for _ in 0..60 {
        if !(fhi > flo) {
            break;
        }
        let h = (lo * fhi - hi * flo) / (fhi - flo);
        let Some(p) = at(h) else { break };
        let f = p.y - y0;
        best = p;
        if f.abs() <= 1e-15 * (1.0 + y0.abs()) || hi - lo <= 1e-15 * st.length {
            break;
        }
        if f < 0.0 {
            lo = h;
            flo = f;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = h;
            fhi = f;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    best
}

/// Return distance of seed `k`.
pub fn return_distance<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    seed_index: usize,
    cfg: &LineIntegration,
) -> Result<Return, NoReturn> {
    return_from(field, section, section.coordinate(section.seeds[seed_index]), cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedOrbit {
    pub seed_coordinate: f64,
    /// Remaining `P(x) − x` at the accepted seed.
    pub return_distance: f64,
    pub orbit: Vec<Point>,
}

/// Closed λ-lines through the section, innermost first.
///
/// Seeds whose return distance is already within the closure tolerance are
/// taken as they are. Every other sign change of `P(x) − x` between
/// neighbouring seeds is bisected, and the refined seed is kept if its
/// orbit closes.
pub fn find_closed_orbits<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    cfg: &LineIntegration,
) -> Vec<ClosedOrbit> {
    let returns: Vec<Option<Return>> =
        section.seeds.iter().map(|s| return_from(field, section, section.coordinate(*s), cfg).ok()).collect();
    closed_orbits_from(field, section, cfg, returns)
}

/// As [`find_closed_orbits`], spreading the seed integrations over threads.
pub fn find_closed_orbits_par<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    cfg: &LineIntegration,
) -> Vec<ClosedOrbit> {
    let returns =
        par::map_range(section.seeds.len(), |k| return_from(field, section, section.coordinate(section.seeds[k]), cfg).ok());
    closed_orbits_from(field, section, cfg, returns)
}

fn closed_orbits_from<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    cfg: &LineIntegration,
    returns: Vec<Option<Return>>,
) -> Vec<ClosedOrbit> {
    let len = section.length();
    let closure = CLOSURE_TOLERANCE * len;
    let closes = |r: &Return| r.distance.abs() < closure;
    let mut out = Vec::new();
    for k in 0..returns.len() {
        if let Some(r) = &returns[k] {
            if closes(r) {
                out.push(ClosedOrbit { seed_coordinate: r.seed_coordinate, return_distance: r.distance, orbit: r.orbit.clone() });
                continue;
            }
        }
        let Some(next) = returns.get(k + 1) else { continue };
        let (Some(a), Some(b)) = (&returns[k], next) else { continue };
        if closes(b) || (a.distance > 0.0) == (b.distance > 0.0) {
            continue;
        }
        if let Some(orbit) = bisect(field, section, cfg, a, b) {
            if closes(&orbit) {
                out.push(ClosedOrbit { seed_coordinate: orbit.seed_coordinate, return_distance: orbit.distance, orbit: orbit.orbit });
            }
        }
    }
    out.sort_by(|a, b| a.seed_coordinate.total_cmp(&b.seed_coordinate));
    out
}

/// Bisect a sign change of the return distance. `None` if a midpoint fails
/// to return.
fn bisect<L: LineField + ?Sized>(
    field: &L,
    section: &PoincareSection,
    cfg: &LineIntegration,
    a: &Return,
    b: &Return,
) -> Option<Return> {
    let tol = BISECTION_TOLERANCE * section.length();
    let (mut lo, mut hi) = (a.seed_coordinate, b.seed_coordinate);
    let lo_positive = a.distance > 0.0;
    let mut best: Option<Return> = None;
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = return_from(field, section, mid, cfg).ok()?;
        if (r.distance > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some(r);
    }
    let mid = 0.5 * (lo + hi);
    // re-integrate at the refined seed
    return_from(field, section, mid, cfg).ok().or(best)
}
