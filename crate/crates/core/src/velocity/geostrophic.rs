use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{GriddedVelocityField, VelocityError};
use crate::grid::Axis;

/// Smallest admissible `|f(θ) cos θ|` in s⁻¹.
pub const DEFAULT_CORIOLIS_FLOOR: f64 = 1e-6;

const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
    /// Mean Earth radius, m.
    pub earth_radius: f64,
    /// Earth's mean angular velocity, rad/s.
    pub earth_rotation: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants { gravity: 9.81, earth_radius: 6_371_000.0, earth_rotation: 7.292_115e-5 }
    }
}

impl PhysicalConstants {
    /// Coriolis parameter `2Ω sin θ` for latitude in radians.
    pub fn coriolis(&self, lat_rad: f64) -> f64 {
        2.0 * self.earth_rotation * libm::sin(lat_rad)
    }
}

/// Sea-surface height (metres) on a lon/lat grid in degrees, at times in
/// days. Array layout `[time][lat][lon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SshSeries {
    pub lon: Axis,
    pub lat: Axis,
    pub time: Vec<f64>,
    pub h: Vec<f64>,
}

impl SshSeries {
    pub fn slab(&self, k: usize) -> &[f64] {
        let n = self.lon.len * self.lat.len;
        &self.h[k * n..(k + 1) * n]
    }
}

/// Geostrophic surface velocity from sea-surface height, in degrees per
/// day of longitude and latitude:
///
/// ```text
/// φ̇ = −g / (R² f(θ) cos θ) ∂θ h,   θ̇ = g / (R² f(θ) cos θ) ∂φ h
/// ```
///
/// Derivatives use second-order central differences in the interior and
/// second-order one-sided differences on the grid edges.
pub fn geostrophic_from_ssh(ssh: &SshSeries, consts: &PhysicalConstants) -> Result<GriddedVelocityField, VelocityError> {
    geostrophic_from_ssh_with_floor(ssh, consts, DEFAULT_CORIOLIS_FLOOR)
}

pub fn geostrophic_from_ssh_with_floor(
    ssh: &SshSeries,
    consts: &PhysicalConstants,
    coriolis_floor: f64,
) -> Result<GriddedVelocityField, VelocityError> {
    let (nx, ny) = (ssh.lon.len, ssh.lat.len);
    if nx < 3 || ny < 3 {
        return Err(VelocityError::InvalidGrid("geostrophic differencing needs at least 3×3 nodes"));
    }
    if ssh.h.len() != nx * ny * ssh.time.len() {
        return Err(VelocityError::InvalidGrid("sea-surface height array does not match axis lengths"));
    }
    let deg = PI / 180.0;
    let dlon = ssh.lon.step * deg;
    let dlat = ssh.lat.step * deg;
    // rad/s -> deg/day
    let to_deg_day = SECONDS_PER_DAY / deg;

    let mut scale = Vec::with_capacity(ny);
    for j in 0..ny {
        let lat = ssh.lat.coord(j);
        let theta = lat * deg;
        let fc = consts.coriolis(theta) * libm::cos(theta);
        if !(fc.abs() >= coriolis_floor) {
            return Err(VelocityError::DegenerateLatitude { latitude: lat, value: fc.abs() });
        }
        scale.push(consts.gravity / (consts.earth_radius * consts.earth_radius * fc) * to_deg_day);
    }

    let n = nx * ny;
    let mut u = Vec::with_capacity(ssh.h.len());
    let mut v = Vec::with_capacity(ssh.h.len());
    for k in 0..ssh.time.len() {
        let h = ssh.slab(k);
        for j in 0..ny {
            for i in 0..nx {
                let dh_dlat = derivative(|jj| h[jj * nx + i], j, ny, dlat);
                let dh_dlon = derivative(|ii| h[j * nx + ii], i, nx, dlon);
                u.push(-scale[j] * dh_dlat);
                v.push(scale[j] * dh_dlon);
            }
        }
        debug_assert_eq!(u.len(), (k + 1) * n);
    }
    GriddedVelocityField::new(ssh.lon, ssh.lat, ssh.time.clone(), u, v)
}

#[inline]
fn derivative(f: impl Fn(usize) -> f64, k: usize, n: usize, step: f64) -> f64 {
    // one-sided stencils written as differences so constants cancel exactly
    if k == 0 {
        (4.0 * (f(1) - f(0)) - (f(2) - f(0))) / (2.0 * step)
    } else if k == n - 1 {
        (4.0 * (f(n - 1) - f(n - 2)) - (f(n - 1) - f(n - 3))) / (2.0 * step)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::velocity::VelocityField;
    use alloc::vec;

    fn series(lon: Axis, lat: Axis, f: impl Fn(f64, f64) -> f64) -> SshSeries {
        let mut h = Vec::new();
        for j in 0..lat.len {
            for i in 0..lon.len {
                h.push(f(lon.coord(i), lat.coord(j)));
            }
        }
        SshSeries { lon, lat, time: vec![0.0], h }
    }

    fn band() -> (Axis, Axis) {
        (Axis::spanning(10.0, 20.0, 11), Axis::spanning(-40.0, -20.0, 21))
    }

    #[test]
    fn constant_height_gives_rest() {
        let (lon, lat) = band();
        let vel = geostrophic_from_ssh(&series(lon, lat, |_, _| 0.7), &PhysicalConstants::default()).unwrap();
        assert!(vel.u().iter().chain(vel.v()).all(|&c| c == 0.0));
    }

    #[test]
    fn linear_in_longitude_is_exact() {
        let c = 0.3; // metres per radian of longitude
        let (lon, lat) = band();
        let consts = PhysicalConstants::default();
        let vel = geostrophic_from_ssh(&series(lon, lat, |l, _| c * l * PI / 180.0), &consts).unwrap();
        for j in 0..lat.len {
            let theta = lat.coord(j) * PI / 180.0;
            let expected = consts.gravity * c
                / (consts.earth_radius.powi(2) * consts.coriolis(theta) * theta.cos())
                * 86_400.0
                * 180.0
                / PI;
            for i in 0..lon.len {
                let idx = j * lon.len + i;
                assert!(vel.u()[idx].abs() < 1e-18);
                assert!((vel.v()[idx] - expected).abs() < 1e-12 * expected.abs(), "{} vs {}", vel.v()[idx], expected);
            }
        }
    }

    #[test]
    fn sign_flip_negates_velocity() {
        let (lon, lat) = band();
        let f = |l: f64, t: f64| (0.1 * l).sin() * (0.2 * t).cos() + 0.01 * l * t;
        let consts = PhysicalConstants::default();
        let a = geostrophic_from_ssh(&series(lon, lat, f), &consts).unwrap();
        let b = geostrophic_from_ssh(&series(lon, lat, |l, t| -f(l, t)), &consts).unwrap();
        for (x, y) in a.u().iter().zip(b.u()).chain(a.v().iter().zip(b.v())) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn equatorial_rows_are_rejected() {
        let lon = Axis::spanning(0.0, 4.0, 5);
        let lat = Axis::spanning(-2.0, 2.0, 5);
        let err = geostrophic_from_ssh(&series(lon, lat, |_, _| 0.0), &PhysicalConstants::default()).unwrap_err();
        assert!(matches!(err, VelocityError::DegenerateLatitude { latitude, .. } if latitude == 0.0));
    }

    #[test]
    fn output_is_queryable_field() {
        let (lon, lat) = band();
        let vel = geostrophic_from_ssh(&series(lon, lat, |l, t| 0.01 * l + 0.02 * t), &PhysicalConstants::default()).unwrap();
        assert!(vel.velocity(0.0, Point::new(15.0, -30.0)).is_ok());
    }
}
