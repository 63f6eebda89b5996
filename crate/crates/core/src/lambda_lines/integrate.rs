//! Trajectories of a line field. A line field has no global orientation, so
//! each evaluation picks the representative closest to the previous
//! direction; a sharp turn means a singularity is being crossed.

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::ops::ControlFlow;

use super::eta::{LineField, LineFieldError};
use crate::geometry::Point;

/// `cos(π/4)`: consecutive directions turning further than this halt the
/// integration.
pub const DIRECTION_JUMP_COS: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntegration {
    /// Fixed arclength step of the RK4 scheme.
    pub step: f64,
    pub max_arclength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    MaxArclength,
    LeftDomain,
    /// A cell with an isotropic (or unusable) corner node was entered.
    DegenerateCell,
    /// Consecutive directions turned by more than π/4.
    DirectionJump,
    /// The visitor asked to stop.
    Stopped,
}

impl HaltReason {
    /// Halts that indicate the line ran into a singularity.
    pub fn is_singularity_crossing(self) -> bool {
        matches!(self, HaltReason::DegenerateCell | HaltReason::DirectionJump)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaLine {
    pub points: Vec<Point>,
    pub arclength: f64,
    pub halt: HaltReason,
}

fn halt_of(e: LineFieldError) -> HaltReason {
    match e {
        LineFieldError::OutsideDomain => HaltReason::LeftDomain,
        LineFieldError::Degenerate => HaltReason::DegenerateCell,
    }
}

/// Direction at `p` aligned with `prev`. `check` enables the jump test.
#[inline]
fn aligned<L: LineField + ?Sized>(field: &L, p: Point, prev: Point, check: bool) -> Result<Point, HaltReason> {
    let d = field.direction(p).map_err(halt_of)?;
    let dot = d.dot(prev);
    if check && dot.abs() < DIRECTION_JUMP_COS {
        return Err(HaltReason::DirectionJump);
    }
    Ok(if dot < 0.0 { -d } else { d })
}

/// One classical RK4 step of length `h` from `p`, representatives aligned
/// with `dir`. Returns the end point and the aligned direction at `p`.
pub fn rk4_step<L: LineField + ?Sized>(field: &L, p: Point, dir: Point, h: f64, check_first: bool) -> Result<(Point, Point), HaltReason> {
    let k1 = aligned(field, p, dir, check_first)?;
    let k2 = aligned(field, p + (0.5 * h) * k1, k1, true)?;
    let k3 = aligned(field, p + (0.5 * h) * k2, k2, true)?;
    let k4 = aligned(field, p + h * k3, k3, true)?;
    Ok((p + h * ((1.0 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)), k1))
}

/// An accepted step, handed to the visitor of [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub from: Point,
    pub to: Point,
    /// Orientation the step was aligned with; repeating
    /// `rk4_step(field, from, orientation, h, false)` reproduces it.
    pub orientation: Point,
    pub length: f64,
    /// Arclength at `to`.
    pub arclength: f64,
}

/// Integrate from `seed` with the representative closest to `orientation`.
/// After every accepted step the visitor may stop the integration.
pub fn integrate_with<L, V>(
    field: &L,
    seed: Point,
    orientation: Point,
    cfg: &LineIntegration,
    mut visit: V,
) -> LambdaLine
where
    L: LineField + ?Sized,
    V: FnMut(&Step) -> ControlFlow<()>,
{
    let h = cfg.step;
    let mut points = alloc::vec![seed];
    let mut p = seed;
    let mut s = 0.0;
    let mut dir = orientation;
    let mut first = true;
    let halt = loop {
        if s >= cfg.max_arclength - 1e-12 * cfg.max_arclength {
            break HaltReason::MaxArclength;
        }
        let h = h.min(cfg.max_arclength - s);
        let check = !first;
        let (next, k1) = match rk4_step(field, p, dir, h, check) {
            Ok(v) => v,
            Err(r) => break r,
        };
        s += h;
        points.push(next);
        first = false;
        let step = Step { from: p, to: next, orientation: dir, length: h, arclength: s };
        dir = k1;
        if let ControlFlow::Break(()) = visit(&step) {
            break HaltReason::Stopped;
        }
        p = next;
    };
    LambdaLine { points, arclength: s, halt }
}

/// Integrate until one of the halt conditions fires.
pub fn integrate_lambda_line<L: LineField + ?Sized>(
    field: &L,
    seed: Point,
    orientation: Point,
    cfg: &LineIntegration,
) -> LambdaLine {
    integrate_with(field, seed, orientation, cfg, |_| ControlFlow::Continue(()))
}
