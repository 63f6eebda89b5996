//! Uniform rectilinear grids and scalar fields sampled on them.

use alloc::vec::Vec;

use crate::geometry::{Bounds, Point};

/// Uniformly spaced coordinate axis `start + k * step`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    /// `len` nodes spanning `[start, end]` inclusive.
    pub fn spanning(start: f64, end: f64, len: usize) -> Self {
        let step = if len > 1 { (end - start) / (len - 1) as f64 } else { 0.0 };
        Axis { start, step, len }
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    #[inline]
    pub fn end(&self) -> f64 {
        self.coord(self.len.saturating_sub(1))
    }

    /// Fractional index of `x`, unclamped.
    #[inline]
    pub fn frac_index(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }

    /// Cell index `k` and local coordinate in `[0, 1]` such that
    /// `x = coord(k) + s * step`. `None` outside the axis range.
    #[inline]
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if self.len < 2 || !x.is_finite() {
            return None;
        }
        let f = self.frac_index(x);
        let last = (self.len - 1) as f64;
        // tolerate round-off at both ends
        if f < -1e-9 || f > last + 1e-9 {
            return None;
        }
        let f = f.clamp(0.0, last);
        let k = (libm::floor(f) as usize).min(self.len - 2);
        // queries landing exactly on a node get an exact local coordinate
        if x == self.coord(k) {
            return Some((k, 0.0));
        }
        if x == self.coord(k + 1) {
            return Some((k, 1.0));
        }
        Some((k, f - k as f64))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.locate(x).is_some()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.coord(k)).collect()
    }
}

/// Shape and coordinates of a 2D grid; data is stored row-major with `y`
/// as the slow index: `data[j * nx + i]` sits at `(x.coord(i), y.coord(j))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
}

impl GridSpec {
    pub fn new(x: Axis, y: Axis) -> Self {
        GridSpec { x, y }
    }

    /// `nx × ny` nodes covering `bounds` inclusive.
    pub fn covering(bounds: Bounds, nx: usize, ny: usize) -> Self {
        GridSpec {
            x: Axis::spanning(bounds.x_min, bounds.x_max, nx),
            y: Axis::spanning(bounds.y_min, bounds.y_max, ny),
        }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.x.len
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.y.len
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.x.len * self.y.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.len + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.x.len, idx / self.x.len)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.x.coord(i), self.y.coord(j))
    }

    /// Grid spacing used for distance thresholds (the larger of the two).
    pub fn spacing(&self) -> f64 {
        self.x.step.abs().max(self.y.step.abs())
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.x.start, self.x.end(), self.y.start, self.y.end())
    }

    /// Cell `(i, j)` and local coordinates `(s, t)` of a point.
    #[inline]
    pub fn locate(&self, p: Point) -> Option<(usize, usize, f64, f64)> {
        let (i, s) = self.x.locate(p.x)?;
        let (j, t) = self.y.locate(p.y)?;
        Some((i, j, s, t))
    }
}

/// Scalar samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid2D {
    pub spec: GridSpec,
    pub data: Vec<f64>,
}

impl ScalarGrid2D {
    pub fn new(spec: GridSpec, data: Vec<f64>) -> Self {
        assert_eq!(spec.len(), data.len(), "grid data length mismatch");
        ScalarGrid2D { spec, data }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(Point) -> f64) -> Self {
        let data = (0..spec.len())
            .map(|k| {
                let (i, j) = spec.ij(k);
                f(spec.node(i, j))
            })
            .collect();
        ScalarGrid2D { spec, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.spec.index(i, j)]
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn bilinear(&self, p: Point) -> Option<f64> {
        let (i, j, s, t) = self.spec.locate(p)?;
        let corners = [self.get(i, j), self.get(i + 1, j), self.get(i, j + 1), self.get(i + 1, j + 1)];
        Some(bilinear(corners, s, t))
    }
}

/// Bilinear blend of corner values ordered `[f00, f10, f01, f11]`.
#[inline]
pub fn bilinear(c: [f64; 4], s: f64, t: f64) -> f64 {
    let bottom = c[0] + s * (c[1] - c[0]);
    let top = c[2] + s * (c[3] - c[2]);
    bottom + t * (top - bottom)
}
