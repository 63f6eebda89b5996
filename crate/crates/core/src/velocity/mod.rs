//! Time-dependent planar velocity fields.
//!
//! Everything that can be advected implements [`VelocityField`]: the
//! analytic double gyre, gridded data with space-time interpolation, and a
//! handful of closed-form test flows.

mod double_gyre;
mod geostrophic;
mod gridded;
pub mod synthetic;

pub use double_gyre::DoubleGyre;
pub use geostrophic::{
    geostrophic_from_ssh, geostrophic_from_ssh_with_floor, PhysicalConstants, SshSeries,
    DEFAULT_CORIOLIS_FLOOR,
};
pub use gridded::{cubic_weights, GriddedVelocityField};

use core::fmt;

use crate::geometry::{Bounds, Mat2, Point};

/// Which coordinate of a query fell outside the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Time,
    X,
    Y,
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisKind::Time => "time",
            AxisKind::X => "x",
            AxisKind::Y => "y",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VelocityError {
    #[error("query outside the {axis} axis (value {value})")]
    OutOfBounds { axis: AxisKind, value: f64 },
    #[error("interpolation stencil at ({x}, {y}) touches masked data")]
    Masked { x: f64, y: f64 },
    #[error("grid latitude {latitude}° is too close to the equator or a pole (|f cos θ| = {value:e})")]
    DegenerateLatitude { latitude: f64, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}

/// A velocity field `u(t, x)`.
///
/// Implementations are immutable and safe to evaluate concurrently.
pub trait VelocityField: Sync {
    fn velocity(&self, t: f64, p: Point) -> Result<Point, VelocityError>;

    /// Region in which trajectories are admissible, when the field has one.
    fn domain(&self) -> Option<Bounds> {
        None
    }

    /// Evaluate at several points sharing one time. Implementations may
    /// hoist time-only work out of the loop.
    fn velocities(&self, t: f64, ps: &[Point], out: &mut [Point]) -> Result<(), VelocityError> {
        for (p, o) in ps.iter().zip(out.iter_mut()) {
            *o = self.velocity(t, *p)?;
        }
        Ok(())
    }
}

impl<F: VelocityField + ?Sized> VelocityField for &F {
    fn velocity(&self, t: f64, p: Point) -> Result<Point, VelocityError> {
        (**self).velocity(t, p)
    }
    fn domain(&self) -> Option<Bounds> {
        (**self).domain()
    }
    fn velocities(&self, t: f64, ps: &[Point], out: &mut [Point]) -> Result<(), VelocityError> {
        (**self).velocities(t, ps, out)
    }
}

/// Constant velocity everywhere (zero for the rest state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform(pub Point);

impl VelocityField for Uniform {
    fn velocity(&self, _t: f64, _p: Point) -> Result<Point, VelocityError> {
        Ok(self.0)
    }
}

/// Steady linear field `u = M x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear(pub Mat2);

impl VelocityField for Linear {
    fn velocity(&self, _t: f64, p: Point) -> Result<Point, VelocityError> {
        Ok(self.0.apply(p))
    }
}

/// Wraps a field and rejects positions outside a rectangle.
#[derive(Debug, Clone, Copy)]
pub struct Bounded<F> {
    pub field: F,
    pub bounds: Bounds,
}

impl<F: VelocityField> VelocityField for Bounded<F> {
    fn velocity(&self, t: f64, p: Point) -> Result<Point, VelocityError> {
        if p.x < self.bounds.x_min || p.x > self.bounds.x_max {
            return Err(VelocityError::OutOfBounds { axis: AxisKind::X, value: p.x });
        }
        if p.y < self.bounds.y_min || p.y > self.bounds.y_max {
            return Err(VelocityError::OutOfBounds { axis: AxisKind::Y, value: p.y });
        }
        self.field.velocity(t, p)
    }

    fn domain(&self) -> Option<Bounds> {
        Some(self.bounds)
    }
}
