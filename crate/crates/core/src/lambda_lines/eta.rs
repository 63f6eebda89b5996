use core::fmt;

use crate::cauchy_green::{eigen_decompose, Eigen, EigenField, SymmetricTensorField};
use crate::geometry::{Bounds, Point};

/// Which of the two λ-line fields `η_λ^±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        }
    }

    pub fn parse(s: &str) -> Option<Branch> {
        match s {
            "+" | "plus" => Some(Branch::Plus),
            "-" | "minus" => Some(Branch::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaFieldSpec {
    /// Uniform stretching factor, `> 0`.
    pub lambda: f64,
    pub branch: Branch,
}

impl EtaFieldSpec {
    pub fn new(lambda: f64, branch: Branch) -> Option<Self> {
        (lambda > 0.0 && lambda.is_finite()).then_some(EtaFieldSpec { lambda, branch })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EtaError {
    #[error("λ² lies outside [λ1, λ2]")]
    OutsideDomain,
    #[error("tensor is isotropic")]
    DegenerateTensor,
}

/// ξ1 with fixed handedness relative to ξ2, `ξ1 × ξ2 = +1`, so flipping
/// the representative of ξ2 flips η as a whole.
#[inline]
fn xi1_of(xi2: Point) -> Point {
    Point::new(xi2.y, -xi2.x)
}

/// `η = a ξ1 ± b ξ2` with `a = √((λ2 − λ²)/(λ2 − λ1))` and
/// `b = √((λ² − λ1)/(λ2 − λ1))`; valid for `λ1 ≤ λ² ≤ λ2`.
pub fn eta_direction(e: &Eigen, spec: &EtaFieldSpec) -> Result<Point, EtaError> {
    if e.degenerate {
        return Err(EtaError::DegenerateTensor);
    }
    let l2 = spec.lambda * spec.lambda;
    if l2 < e.lambda1 || l2 > e.lambda2 {
        return Err(EtaError::OutsideDomain);
    }
    let gap = e.lambda2 - e.lambda1;
    let a = libm::sqrt((e.lambda2 - l2) / gap);
    let b = libm::sqrt((l2 - e.lambda1) / gap);
    Ok(a * xi1_of(e.xi2) + (spec.branch.sign() * b) * e.xi2)
}

/// `η` continued by ξ2 where `λ2 ≤ λ²` and by ξ1 where `λ1 ≥ λ²`.
pub fn extend_eta(e: &Eigen, spec: &EtaFieldSpec) -> Result<Point, EtaError> {
    if e.degenerate {
        return Err(EtaError::DegenerateTensor);
    }
    let l2 = spec.lambda * spec.lambda;
    if l2 >= e.lambda2 {
        Ok(e.xi2)
    } else if l2 <= e.lambda1 {
        Ok(xi1_of(e.xi2))
    } else {
        eta_direction(e, spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LineFieldError {
    #[error("point is outside the field's domain")]
    OutsideDomain,
    #[error("line field is undefined (isotropic tensor)")]
    Degenerate,
}

/// A planar line field: some unit vector spanning the line at each point.
/// The sign of the representative carries no meaning.
pub trait LineField: Sync {
    fn direction(&self, p: Point) -> Result<Point, LineFieldError>;
    fn bounds(&self) -> Bounds;
}

impl<L: LineField + ?Sized> LineField for &L {
    fn direction(&self, p: Point) -> Result<Point, LineFieldError> {
        (**self).direction(p)
    }
    fn bounds(&self) -> Bounds {
        (**self).bounds()
    }
}

/// Analytic line field from a closure, for tests and synthetic cases.
pub struct FnLineField<F> {
    pub f: F,
    pub bounds: Bounds,
}

impl<F: Fn(Point) -> Option<Point> + Sync> LineField for FnLineField<F> {
    fn direction(&self, p: Point) -> Result<Point, LineFieldError> {
        if !self.bounds.contains(p) {
            return Err(LineFieldError::OutsideDomain);
        }
        (self.f)(p).and_then(Point::normalized).ok_or(LineFieldError::Degenerate)
    }
    fn bounds(&self) -> Bounds {
        self.bounds
    }
}

/// Extended `η_λ^±` of a computed Cauchy-Green field. Off-node values come
/// from the bilinearly interpolated tensor; cells with a masked or
/// isotropic corner node are treated as degenerate.
pub struct TensorEtaField<'a> {
    tf: &'a SymmetricTensorField,
    ef: &'a EigenField,
    spec: EtaFieldSpec,
}

impl<'a> TensorEtaField<'a> {
    pub fn new(tf: &'a SymmetricTensorField, ef: &'a EigenField, spec: EtaFieldSpec) -> Self {
        TensorEtaField { tf, ef, spec }
    }

    pub fn spec(&self) -> EtaFieldSpec {
        self.spec
    }

    /// Eigen-structure of the interpolated tensor at `p`.
    pub fn eigen_at(&self, p: Point) -> Result<Eigen, LineFieldError> {
        let grid = self.tf.grid;
        let (i, j, s, t) = grid.locate(p).ok_or(LineFieldError::OutsideDomain)?;
        let ids = [grid.index(i, j), grid.index(i + 1, j), grid.index(i, j + 1), grid.index(i + 1, j + 1)];
        if ids.iter().any(|&k| !self.tf.valid[k]) {
            return Err(LineFieldError::OutsideDomain);
        }
        if ids.iter().any(|&k| !self.ef.valid[k] || self.ef.eigen[k].degenerate) {
            return Err(LineFieldError::Degenerate);
        }
        let c = crate::cauchy_green::SymTensor::bilinear(&ids.map(|k| self.tf.tensors[k]), s, t);
        let e = eigen_decompose(&c).map_err(|_| LineFieldError::Degenerate)?;
        if e.degenerate {
            return Err(LineFieldError::Degenerate);
        }
        Ok(e)
    }
}

impl LineField for TensorEtaField<'_> {
    #[inline]
    fn direction(&self, p: Point) -> Result<Point, LineFieldError> {
        let e = self.eigen_at(p)?;
        extend_eta(&e, &self.spec).map_err(|_| LineFieldError::Degenerate)
    }

    fn bounds(&self) -> Bounds {
        self.tf.grid.bounds()
    }
}
