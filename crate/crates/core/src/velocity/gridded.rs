use alloc::vec::Vec;

use super::{AxisKind, VelocityError, VelocityField};
use crate::geometry::{Bounds, Point};
use crate::grid::Axis;

/// Velocity samples on a uniform lon/lat (or x/y) grid at a sequence of
/// times, interpolated with cubic convolution in space and linearly in
/// time.
///
/// Arrays are `[time][y][x]`, row-major. Non-finite samples mark invalid
/// data; any query whose stencil touches one fails with
/// [`VelocityError::Masked`].
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedVelocityField {
    x: Axis,
    y: Axis,
    time: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl GriddedVelocityField {
    pub fn new(x: Axis, y: Axis, time: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self, VelocityError> {
        if x.len < 2 || y.len < 2 {
            return Err(VelocityError::InvalidGrid("spatial axes need at least two nodes"));
        }
        if !(x.step > 0.0) || !(y.step > 0.0) {
            return Err(VelocityError::InvalidGrid("spatial axes must be strictly increasing"));
        }
        if time.is_empty() {
            return Err(VelocityError::InvalidGrid("time axis is empty"));
        }
        if time.windows(2).any(|w| !(w[1] > w[0])) || time.iter().any(|t| !t.is_finite()) {
            return Err(VelocityError::InvalidGrid("time axis must be strictly increasing"));
        }
        let n = x.len * y.len * time.len();
        if u.len() != n || v.len() != n {
            return Err(VelocityError::InvalidGrid("velocity arrays do not match axis lengths"));
        }
        Ok(GriddedVelocityField { x, y, time, u, v })
    }

    pub fn x_axis(&self) -> &Axis {
        &self.x
    }

    pub fn y_axis(&self) -> &Axis {
        &self.y
    }

    pub fn time_axis(&self) -> &[f64] {
        &self.time
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Time slab index and blend weight of the later slab.
    fn locate_time(&self, t: f64) -> Result<(usize, f64), VelocityError> {
        let n = self.time.len();
        if n == 1 {
            return Ok((0, 0.0));
        }
        let (first, last) = (self.time[0], self.time[n - 1]);
        let slack = 1e-12 * (last - first).abs().max(1.0);
        if !(t >= first - slack && t <= last + slack) {
            return Err(VelocityError::OutOfBounds { axis: AxisKind::Time, value: t });
        }
        let t = t.clamp(first, last);
        let k = self.time.partition_point(|&tk| tk <= t).clamp(1, n - 1) - 1;
        let w = (t - self.time[k]) / (self.time[k + 1] - self.time[k]);
        Ok((k, w))
    }

    fn spatial(&self, slab: &[f64], i: usize, s: f64, j: usize, t: f64, p: Point) -> Result<f64, VelocityError> {
        let nx = self.x.len;
        let wx = cubic_weights(s);
        let wy = cubic_weights(t);
        let mut rows = [0.0; 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let jj = j as isize - 1 + r as isize;
            *row = ghost(jj, self.y.len, |jr| {
                let base = jr * nx;
                let mut acc = 0.0;
                for (c, w) in wx.iter().enumerate() {
                    let ii = i as isize - 1 + c as isize;
                    if *w != 0.0 {
                        acc += w * ghost(ii, nx, |ic| slab[base + ic]);
                    }
                }
                acc
            });
        }
        let val = rows.iter().zip(wy.iter()).filter(|(_, w)| **w != 0.0).map(|(r, w)| r * w).sum::<f64>();
        if val.is_finite() {
            Ok(val)
        } else {
            Err(VelocityError::Masked { x: p.x, y: p.y })
        }
    }

    fn sample(&self, t: f64, p: Point) -> Result<Point, VelocityError> {
        let (i, s) = self.x.locate(p.x).ok_or(VelocityError::OutOfBounds { axis: AxisKind::X, value: p.x })?;
        let (j, tt) = self.y.locate(p.y).ok_or(VelocityError::OutOfBounds { axis: AxisKind::Y, value: p.y })?;
        let (k, w) = self.locate_time(t)?;
        let slab_len = self.x.len * self.y.len;
        let at = |field: &[f64], k: usize| self.spatial(&field[k * slab_len..(k + 1) * slab_len], i, s, j, tt, p);
        if w == 1.0 {
            return Ok(Point::new(at(&self.u, k + 1)?, at(&self.v, k + 1)?));
        }
        let mut u = at(&self.u, k)?;
        let mut v = at(&self.v, k)?;
        if w > 0.0 {
            let u1 = at(&self.u, k + 1)?;
            let v1 = at(&self.v, k + 1)?;
            u += w * (u1 - u);
            v += w * (v1 - v);
        }
        Ok(Point::new(u, v))
    }
}

/// Value at stencil index `k`, with the quadratic-preserving ghost
/// extrapolation `f₋₁ = 3f₀ − 3f₁ + f₂` outside `[0, n)`.
#[inline]
fn ghost(k: isize, n: usize, f: impl Fn(usize) -> f64) -> f64 {
    if k < 0 {
        if n >= 3 {
            3.0 * f(0) - 3.0 * f(1) + f(2)
        } else {
            2.0 * f(0) - f(1)
        }
    } else if k as usize >= n {
        if n >= 3 {
            3.0 * f(n - 1) - 3.0 * f(n - 2) + f(n - 3)
        } else {
            2.0 * f(n - 1) - f(n - 2)
        }
    } else {
        f(k as usize)
    }
}

/// Keys cubic-convolution weights (`a = −1/2`) for the four nodes
/// `k−1, k, k+1, k+2` at local offset `s ∈ [0, 1]`.
#[inline]
pub fn cubic_weights(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        0.5 * (-s3 + 2.0 * s2 - s),
        0.5 * (3.0 * s3 - 5.0 * s2 + 2.0),
        0.5 * (-3.0 * s3 + 4.0 * s2 + s),
        0.5 * (s3 - s2),
    ]
}

impl VelocityField for GriddedVelocityField {
    fn velocity(&self, t: f64, p: Point) -> Result<Point, VelocityError> {
        self.sample(t, p)
    }

    fn domain(&self) -> Option<Bounds> {
        Some(Bounds::new(self.x.start, self.x.end(), self.y.start, self.y.end()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sampled(nx: usize, ny: usize, times: Vec<f64>, f: impl Fn(f64, f64, f64) -> (f64, f64)) -> GriddedVelocityField {
        let x = Axis::spanning(-1.0, 2.0, nx);
        let y = Axis::spanning(0.5, 3.0, ny);
        let mut u = Vec::new();
        let mut v = Vec::new();
        for &t in &times {
            for j in 0..ny {
                for i in 0..nx {
                    let (a, b) = f(t, x.coord(i), y.coord(j));
                    u.push(a);
                    v.push(b);
                }
            }
        }
        GriddedVelocityField::new(x, y, times, u, v).unwrap()
    }

    #[test]
    fn exact_at_nodes() {
        let g = sampled(9, 7, vec![0.0, 1.0, 3.0], |t, x, y| ((x * y).sin() + t, (x - y).cos() * t));
        for k in 0..3 {
            let t = g.time_axis()[k];
            for j in 0..7 {
                for i in 0..9 {
                    let p = Point::new(g.x.coord(i), g.y.coord(j));
                    let got = g.velocity(t, p).unwrap();
                    let idx = (k * 7 + j) * 9 + i;
                    assert_eq!(got.x, g.u()[idx]);
                    assert_eq!(got.y, g.v()[idx]);
                }
            }
        }
    }

    #[test]
    fn constant_in_time_between_slices() {
        let g = sampled(6, 6, vec![0.0, 2.0], |_t, x, y| (x * x - y, x * y * y));
        let p = Point::new(0.37, 1.91);
        let a = g.velocity(0.0, p).unwrap();
        let b = g.velocity(0.7, p).unwrap();
        assert!((a.x - b.x).abs() < 1e-15 && (a.y - b.y).abs() < 1e-15);
    }

    #[test]
    fn linear_field_at_cell_centres() {
        let g = sampled(8, 6, vec![0.0], |_t, x, y| (x + 2.0 * y, 3.0 - x));
        let (dx, dy) = (g.x.step, g.y.step);
        for j in 0..5 {
            for i in 0..7 {
                let p = Point::new(g.x.coord(i) + 0.5 * dx, g.y.coord(j) + 0.5 * dy);
                let got = g.velocity(0.0, p).unwrap();
                assert!((got.x - (p.x + 2.0 * p.y)).abs() < 1e-12);
                assert!((got.y - (3.0 - p.x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_bounds_reports_axis() {
        let g = sampled(4, 4, vec![0.0, 1.0], |_, _, _| (1.0, 1.0));
        let e = g.velocity(0.5, Point::new(2.5, 1.0)).unwrap_err();
        assert_eq!(e, VelocityError::OutOfBounds { axis: AxisKind::X, value: 2.5 });
        let e = g.velocity(0.5, Point::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(e, VelocityError::OutOfBounds { axis: AxisKind::Y, .. }));
        let e = g.velocity(1.5, Point::new(0.0, 1.0)).unwrap_err();
        assert!(matches!(e, VelocityError::OutOfBounds { axis: AxisKind::Time, .. }));
    }

    #[test]
    fn masked_samples_poison_their_stencil() {
        let mut g = sampled(8, 8, vec![0.0], |_, _, _| (1.0, 0.0));
        g.u[3 * 8 + 3] = f64::NAN;
        let node = Point::new(g.x.coord(3), g.y.coord(3));
        assert!(matches!(g.velocity(0.0, node + Point::new(0.01, 0.01)), Err(VelocityError::Masked { .. })));
        let far = Point::new(g.x.coord(7), g.y.coord(7));
        assert!(g.velocity(0.0, far).is_ok());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let x = Axis::spanning(0.0, 1.0, 3);
        assert!(GriddedVelocityField::new(x, x, vec![0.0, 0.0], vec![0.0; 18], vec![0.0; 18]).is_err());
        assert!(GriddedVelocityField::new(x, x, vec![0.0], vec![0.0; 8], vec![0.0; 9]).is_err());
    }

    proptest! {
        #[test]
        fn affine_fields_reproduced_everywhere(
            a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
            d in -3.0..3.0f64, e in -3.0..3.0f64, f in -3.0..3.0f64,
            qx in -1.0..2.0f64, qy in 0.5..3.0f64, qt in 0.0..1.0f64,
        ) {
            let g = sampled(7, 5, vec![0.0, 1.0], |t, x, y| (a + b * x + c * y + t, d + e * x + f * y - t));
            let got = g.velocity(qt, Point::new(qx, qy)).unwrap();
            prop_assert!((got.x - (a + b * qx + c * qy + qt)).abs() < 1e-11);
            prop_assert!((got.y - (d + e * qx + f * qy - qt)).abs() < 1e-11);
        }
    }
}
