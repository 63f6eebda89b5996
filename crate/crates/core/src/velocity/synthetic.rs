//! Synthetic sea-surface height made of drifting Gaussian eddies.
//!
//! Used as a stand-in for altimetry: each eddy is a Gaussian bump (or dip)
//! of sea-surface height whose centre drifts at constant speed, so the
//! geostrophic velocity it induces is a translating vortex.

use alloc::vec::Vec;

use super::SshSeries;
use crate::grid::Axis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEddy {
    /// Centre at time zero, degrees.
    pub lon: f64,
    pub lat: f64,
    /// Height anomaly at the centre, metres (positive = anticyclonic bump).
    pub amplitude: f64,
    /// e-folding radius along the major axis, degrees.
    pub radius: f64,
    /// Ratio of minor to major radius, in `(0, 1]`.
    pub aspect: f64,
    /// Orientation of the major axis, radians from east.
    pub tilt: f64,
    /// Drift of the centre, degrees per day.
    pub drift_lon: f64,
    pub drift_lat: f64,
}

impl GaussianEddy {
    /// Height contribution at `(lon, lat)` and time `t` (days).
    pub fn height(&self, lon: f64, lat: f64, t: f64) -> f64 {
        let clon = self.lon + self.drift_lon * t;
        let clat = self.lat + self.drift_lat * t;
        let dx = (lon - clon) * libm::cos(clat.to_radians());
        let dy = lat - clat;
        let (s, c) = libm::sincos(self.tilt);
        let major = c * dx + s * dy;
        let minor = -s * dx + c * dy;
        let b = self.radius * self.aspect;
        let r2 = major * major / (self.radius * self.radius) + minor * minor / (b * b);
        self.amplitude * libm::exp(-0.5 * r2)
    }
}

/// Westward-drifting plane wave of sea-surface height, a weak large-scale
/// background that keeps the far field from being at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveMode {
    /// Metres.
    pub amplitude: f64,
    /// Degrees.
    pub wavelength_lon: f64,
    pub wavelength_lat: f64,
    /// Zonal phase speed, degrees per day.
    pub phase_speed: f64,
    /// Radians.
    pub phase: f64,
}

impl WaveMode {
    pub fn height(&self, lon: f64, lat: f64, t: f64) -> f64 {
        let kx = core::f64::consts::TAU / self.wavelength_lon;
        let ky = core::f64::consts::TAU / self.wavelength_lat;
        self.amplitude * libm::sin(kx * (lon - self.phase_speed * t) + self.phase) * libm::cos(ky * lat)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticOcean {
    pub eddies: Vec<GaussianEddy>,
    pub background: Vec<WaveMode>,
}

impl SyntheticOcean {
    pub fn height(&self, lon: f64, lat: f64, t: f64) -> f64 {
        let e: f64 = self.eddies.iter().map(|e| e.height(lon, lat, t)).sum();
        let w: f64 = self.background.iter().map(|w| w.height(lon, lat, t)).sum();
        e + w
    }

    /// Heights sampled on the given axes.
    pub fn sample(&self, lon: Axis, lat: Axis, time: Vec<f64>) -> SshSeries {
        let mut h = Vec::with_capacity(lon.len * lat.len * time.len());
        for &t in &time {
            for j in 0..lat.len {
                let la = lat.coord(j);
                for i in 0..lon.len {
                    h.push(self.height(lon.coord(i), la, t));
                }
            }
        }
        SshSeries { lon, lat, time, h }
    }
}

/// Sum of eddies sampled on the given axes.
pub fn synthetic_ssh(eddies: &[GaussianEddy], lon: Axis, lat: Axis, time: Vec<f64>) -> SshSeries {
    SyntheticOcean { eddies: eddies.to_vec(), background: Vec::new() }.sample(lon, lat, time)
}

/// Three drifting eddies over a weak background wave in a Southern Ocean
/// box, the bundled multi-vortex scenario.
pub fn three_eddy_scenario() -> SyntheticOcean {
    SyntheticOcean { eddies: three_eddies(), background: alloc::vec![background_wave()] }
}

pub fn background_wave() -> WaveMode {
    WaveMode { amplitude: 0.03, wavelength_lon: 6.0, wavelength_lat: 5.0, phase_speed: -0.05, phase: 0.4 }
}

pub fn three_eddies() -> Vec<GaussianEddy> {
    alloc::vec![
        GaussianEddy {
            lon: 14.0,
            lat: -31.0,
            amplitude: 0.25,
            radius: 0.6,
            aspect: 0.8,
            tilt: 0.3,
            drift_lon: -0.04,
            drift_lat: -0.005,
        },
        GaussianEddy {
            lon: 18.5,
            lat: -34.0,
            amplitude: -0.22,
            radius: 0.55,
            aspect: 0.85,
            tilt: -0.6,
            drift_lon: -0.035,
            drift_lat: 0.004,
        },
        GaussianEddy {
            lon: 20.0,
            lat: -29.5,
            amplitude: 0.2,
            radius: 0.5,
            aspect: 0.75,
            tilt: 1.1,
            drift_lon: -0.03,
            drift_lat: 0.0,
        },
    ]
}

/// Axes of the bundled scenario: 1/8° grid, daily snapshots over 60 days.
pub fn three_eddy_axes() -> (Axis, Axis, Vec<f64>) {
    (
        Axis::spanning(10.0, 24.0, 113),
        Axis::spanning(-38.0, -26.0, 97),
        (0..=60).map(|d| d as f64).collect(),
    )
}
