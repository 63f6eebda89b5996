//! Particle advection, the flow map on a grid, and its gradient.
//!
//! The gradient of the flow map is estimated on auxiliary grids: every main
//! node carries four companions offset by `ρ·Δx` along `±x` and `±y`, and
//! the four are advected together with one shared step sequence. Central
//! differences of their images give `DF` independently of the main-grid
//! resolution.

mod integrator;

use alloc::vec::Vec;

use crate::geometry::{Mat2, Point};
use crate::grid::GridSpec;
use crate::par;
use crate::velocity::VelocityField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step (rounded so that
    /// a whole number of steps spans the horizon).
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) with mixed absolute/relative error control.
    Rk45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t0: f64,
    /// Integration time `T`; negative values integrate backward.
    pub horizon: f64,
}

impl IntegratorConfig {
    pub fn rk45(t0: f64, horizon: f64, tol: f64) -> Self {
        IntegratorConfig { method: Method::Rk45 { abs_tol: tol, rel_tol: tol }, t0, horizon }
    }

    /// Fixed-step RK4 with `steps` steps over the horizon.
    pub fn rk4_steps(t0: f64, horizon: f64, steps: usize) -> Self {
        let step = if horizon == 0.0 { 1.0 } else { horizon.abs() / steps.max(1) as f64 };
        IntegratorConfig { method: Method::Rk4 { step }, t0, horizon }
    }

    /// Same method over a different time window.
    pub fn window(&self, t0: f64, horizon: f64) -> Self {
        IntegratorConfig { method: self.method, t0, horizon }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let ok = match self.method {
            Method::Rk4 { step } => step > 0.0 && step.is_finite(),
            Method::Rk45 { abs_tol, rel_tol } => abs_tol > 0.0 && rel_tol > 0.0,
        };
        if ok && self.t0.is_finite() && self.horizon.is_finite() {
            Ok(())
        } else {
            Err(FlowError::InvalidConfig("step sizes and tolerances must be positive and finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("trajectory left the data domain at t = {t} near ({}, {})", position.x, position.y)]
    LeftDomain { t: f64, position: Point },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step limit exceeded at t = {t}")]
    TooManySteps { t: f64 },
    #[error("grid point ({i}, {j}) has no valid flow-map stencil")]
    InvalidPoint { i: usize, j: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// `F_{t0}^{t0+T}(x0)`.
pub fn advect<F: VelocityField + ?Sized>(field: &F, x0: Point, cfg: &IntegratorConfig) -> Result<Point, FlowError> {
    cfg.validate()?;
    integrator::integrate(field, [x0], cfg).map(|[p]| p)
}

/// Flow-map images of the auxiliary stencil around every main-grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMapGrid {
    pub grid: GridSpec,
    /// Stencil half-width as a fraction of the grid spacing.
    pub rho: f64,
    pub t0: f64,
    pub horizon: f64,
    /// Images of `x0 + δx e_x`, `x0 − δx e_x`, `x0 + δy e_y`, `x0 − δy e_y`.
    pub stencil: Vec<[Point; 4]>,
    pub valid: Vec<bool>,
}

impl FlowMapGrid {
    pub fn from_parts(
        grid: GridSpec,
        rho: f64,
        t0: f64,
        horizon: f64,
        stencil: Vec<[Point; 4]>,
        valid: Vec<bool>,
    ) -> Result<Self, FlowError> {
        check_rho(rho)?;
        if stencil.len() != grid.len() || valid.len() != grid.len() {
            return Err(FlowError::InvalidConfig("stencil arrays do not match the grid"));
        }
        if stencil.iter().zip(&valid).any(|(s, v)| *v && !s.iter().all(|p| p.is_finite())) {
            return Err(FlowError::InvalidConfig("valid stencil contains non-finite positions"));
        }
        Ok(FlowMapGrid { grid, rho, t0, horizon, stencil, valid })
    }

    /// Absolute stencil offsets along x and y.
    pub fn offsets(&self) -> (f64, f64) {
        (self.rho * self.grid.x.step.abs(), self.rho * self.grid.y.step.abs())
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.valid[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

fn check_rho(rho: f64) -> Result<(), FlowError> {
    if rho > 0.0 && rho <= 0.5 {
        Ok(())
    } else {
        Err(FlowError::InvalidConfig("stencil half-width must satisfy 0 < rho <= 0.5"))
    }
}

/// Advect the auxiliary stencil of every node of `grid`.
///
/// Trajectories that leave the data domain mark their node invalid instead
/// of aborting the computation.
pub fn compute_flow_map_grid<F: VelocityField + ?Sized>(
    field: &F,
    grid: GridSpec,
    rho: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowMapGrid, FlowError> {
    check_rho(rho)?;
    cfg.validate()?;
    if grid.nx() < 2 || grid.ny() < 2 {
        return Err(FlowError::InvalidConfig("flow-map grid needs at least 2×2 nodes"));
    }
    let dx = rho * grid.x.step.abs();
    let dy = rho * grid.y.step.abs();
    if let Some(dom) = field.domain() {
        let b = grid.bounds();
        if b.x_min - dx < dom.x_min || b.x_max + dx > dom.x_max || b.y_min - dy < dom.y_min || b.y_max + dy > dom.y_max {
            return Err(FlowError::InvalidConfig("flow-map grid and stencil margin must lie inside the velocity domain"));
        }
    }
    let results = par::map_range(grid.len(), |k| {
        let (i, j) = grid.ij(k);
        let p = grid.node(i, j);
        let start = [p + Point::new(dx, 0.0), p - Point::new(dx, 0.0), p + Point::new(0.0, dy), p - Point::new(0.0, dy)];
        integrator::integrate(field, start, cfg).ok()
    });
    let mut stencil = Vec::with_capacity(results.len());
    let mut valid = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Some(s) if s.iter().all(|p| p.is_finite()) => {
                stencil.push(s);
                valid.push(true);
            }
            _ => {
                stencil.push([Point::new(f64::NAN, f64::NAN); 4]);
                valid.push(false);
            }
        }
    }
    Ok(FlowMapGrid { grid, rho, t0: cfg.t0, horizon: cfg.horizon, stencil, valid })
}

/// Central-difference estimate of `DF` at node `(i, j)`.
pub fn deformation_gradient(fm: &FlowMapGrid, i: usize, j: usize) -> Result<Mat2, FlowError> {
    if i >= fm.grid.nx() || j >= fm.grid.ny() {
        return Err(FlowError::InvalidPoint { i, j });
    }
    let k = fm.grid.index(i, j);
    if !fm.valid[k] {
        return Err(FlowError::InvalidPoint { i, j });
    }
    let [xp, xm, yp, ym] = fm.stencil[k];
    let (dx, dy) = fm.offsets();
    // divide by the separation the stencil actually started with
    let p = fm.grid.node(i, j);
    let sx = (p.x + dx) - (p.x - dx);
    let sy = (p.y + dy) - (p.y - dy);
    let col_x = (1.0 / sx) * (xp - xm);
    let col_y = (1.0 / sy) * (yp - ym);
    Ok(Mat2::from_columns(col_x, col_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bounds;
    use crate::velocity::{Bounded, DoubleGyre, Linear, Uniform};
    use core::f64::consts::PI;

    fn rotation_field() -> Linear {
        Linear(Mat2::new(0.0, -1.0, 1.0, 0.0))
    }

    #[test]
    fn uniform_flow_is_exact() {
        let f = Uniform(Point::new(1.0, 0.0));
        for cfg in [IntegratorConfig::rk4_steps(0.0, 2.0, 7), IntegratorConfig::rk45(0.0, 2.0, 1e-8)] {
            let p = advect(&f, Point::ZERO, &cfg).unwrap();
            assert!((p.x - 2.0).abs() < 1e-14 && p.y == 0.0, "{p:?}");
        }
    }

    #[test]
    fn zero_horizon_is_identity() {
        let x0 = Point::new(0.3, 0.7);
        let p = advect(&DoubleGyre::default(), x0, &IntegratorConfig::rk45(1.3, 0.0, 1e-6)).unwrap();
        assert_eq!(p, x0);
    }

    #[test]
    fn solid_body_rotation_quarter_turn() {
        let cfg = IntegratorConfig::rk45(0.0, PI / 2.0, 1e-10);
        let p = advect(&rotation_field(), Point::new(1.0, 0.0), &cfg).unwrap();
        assert!(p.x.abs() < 1e-8 && (p.y - 1.0).abs() < 1e-8, "{p:?}");
        let cfg = IntegratorConfig::rk4_steps(0.0, PI / 2.0, 1000);
        let p = advect(&rotation_field(), Point::new(1.0, 0.0), &cfg).unwrap();
        assert!(p.x.abs() < 1e-10 && (p.y - 1.0).abs() < 1e-10, "{p:?}");
    }

    #[test]
    fn composition_and_reversal() {
        let g = DoubleGyre::default();
        let tol = 1e-8;
        for &(x, y) in &[(0.3, 0.4), (0.8, 0.2), (1.4, 0.6)] {
            let x0 = Point::new(x, y);
            let full = advect(&g, x0, &IntegratorConfig::rk45(0.0, 6.0, tol)).unwrap();
            let half = advect(&g, x0, &IntegratorConfig::rk45(0.0, 2.5, tol)).unwrap();
            let composed = advect(&g, half, &IntegratorConfig::rk45(2.5, 3.5, tol)).unwrap();
            assert!(full.distance(composed) < 10.0 * tol * 10.0, "{}", full.distance(composed));
            let back = advect(&g, full, &IntegratorConfig::rk45(6.0, -6.0, tol)).unwrap();
            assert!(back.distance(x0) < 10.0 * tol * 10.0, "{}", back.distance(x0));
        }
    }

    #[test]
    fn leaving_the_domain_is_reported() {
        let f = Bounded { field: Uniform(Point::new(1.0, 0.0)), bounds: Bounds::new(0.0, 1.0, 0.0, 1.0) };
        let err = advect(&f, Point::new(0.5, 0.5), &IntegratorConfig::rk45(0.0, 2.0, 1e-6)).unwrap_err();
        match err {
            FlowError::LeftDomain { t, position } => {
                assert!(t > 0.0 && t <= 2.0);
                assert!(position.x > 1.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn grid_of_rest_state_is_identity() {
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 6, 5);
        let fm = compute_flow_map_grid(&Uniform(Point::ZERO), grid, 0.1, &IntegratorConfig::rk45(0.0, 3.0, 1e-6)).unwrap();
        for j in 0..5 {
            for i in 0..6 {
                assert_eq!(deformation_gradient(&fm, i, j).unwrap(), Mat2::IDENTITY);
                let p = grid.node(i, j);
                let (dx, _) = fm.offsets();
                assert_eq!(fm.stencil[grid.index(i, j)][0], p + Point::new(dx, 0.0));
            }
        }
    }

    #[test]
    fn translation_shifts_every_point() {
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 4, 4);
        let u = Point::new(0.3, -0.2);
        let fm = compute_flow_map_grid(&Uniform(u), grid, 0.25, &IntegratorConfig::rk4_steps(0.0, 2.0, 10)).unwrap();
        for (k, s) in fm.stencil.iter().enumerate() {
            let (i, j) = grid.ij(k);
            let p = grid.node(i, j);
            let (dx, _) = fm.offsets();
            assert!(s[0].distance(p + Point::new(dx, 0.0) + 2.0 * u) < 1e-14);
            let df = deformation_gradient(&fm, i, j).unwrap();
            assert!(df.max_abs_diff(&Mat2::IDENTITY) < 1e-12);
        }
    }

    #[test]
    fn linear_flow_gradient_is_matrix_exponential() {
        // M = [[0.3, 0.5], [-0.2, -0.1]]; oracle: truncated Taylor series of exp(MT)
        let m = Mat2::new(0.3, 0.5, -0.2, -0.1);
        let t = 1.7;
        let mut term = Mat2::IDENTITY;
        let mut expm = Mat2::IDENTITY;
        for k in 1..40 {
            term = term.mul_mat(&m);
            let s = t / k as f64;
            term = Mat2::new(term.a * s, term.b * s, term.c * s, term.d * s);
            expm = Mat2::new(expm.a + term.a, expm.b + term.b, expm.c + term.c, expm.d + term.d);
        }
        let grid = GridSpec::covering(Bounds::new(-1.0, 1.0, -1.0, 1.0), 5, 5);
        let fm = compute_flow_map_grid(&Linear(m), grid, 0.1, &IntegratorConfig::rk45(0.0, t, 1e-10)).unwrap();
        for j in 0..5 {
            for i in 0..5 {
                let df = deformation_gradient(&fm, i, j).unwrap();
                assert!(df.max_abs_diff(&expm) < 1e-7, "{df:?} vs {expm:?}");
            }
        }
    }

    #[test]
    fn masked_nodes_do_not_abort_the_grid() {
        let f = Bounded { field: Uniform(Point::new(1.0, 0.0)), bounds: Bounds::new(-0.1, 1.6, -0.1, 1.1) };
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 11, 3);
        let fm = compute_flow_map_grid(&f, grid, 0.1, &IntegratorConfig::rk4_steps(0.0, 0.75, 20)).unwrap();
        for j in 0..3 {
            for i in 0..11 {
                let x = grid.x.coord(i) + 0.01 + 0.75;
                assert_eq!(fm.is_valid(i, j), x <= 1.6, "node {i}");
            }
        }
        assert!(matches!(deformation_gradient(&fm, 10, 0), Err(FlowError::InvalidPoint { i: 10, j: 0 })));
    }

    #[test]
    fn double_gyre_spot_checks_against_refined_integration() {
        let g = DoubleGyre::default();
        let horizon = 5.0 * PI / 2.0;
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 50, 50);
        let fm = compute_flow_map_grid(&g, grid, 0.1, &IntegratorConfig::rk45(0.0, horizon, 1e-6)).unwrap();
        let fine = IntegratorConfig::rk4_steps(0.0, horizon, 20_000);
        for &(i, j) in &[(10, 12), (25, 25), (40, 7)] {
            let (dx, _) = fm.offsets();
            let start = grid.node(i, j) + Point::new(dx, 0.0);
            let reference = advect(&g, start, &fine).unwrap();
            let got = fm.stencil[grid.index(i, j)][0];
            assert!(got.distance(reference) < 1e-4, "node ({i},{j}): {}", got.distance(reference));
        }
    }

    #[test]
    fn rejects_bad_rho_and_config() {
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 3, 3);
        let f = Uniform(Point::ZERO);
        assert!(compute_flow_map_grid(&f, grid, 0.0, &IntegratorConfig::rk45(0.0, 1.0, 1e-6)).is_err());
        assert!(compute_flow_map_grid(&f, grid, 0.6, &IntegratorConfig::rk45(0.0, 1.0, 1e-6)).is_err());
        assert!(compute_flow_map_grid(&f, grid, 0.1, &IntegratorConfig::rk45(0.0, 1.0, -1e-6)).is_err());
    }
}
