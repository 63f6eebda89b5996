//! Explicit Runge-Kutta integration of `ẋ = u(t, x)` for a small group of
//! particles advanced with one shared step sequence.

use crate::geometry::Point;
use crate::velocity::VelocityField;

use super::{FlowError, IntegratorConfig, Method};

const MAX_STEPS: usize = 200_000;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Advance `N` particles from `cfg.t0` to `cfg.t0 + cfg.horizon`.
pub(crate) fn integrate<F: VelocityField + ?Sized, const N: usize>(
    field: &F,
    y0: [Point; N],
    cfg: &IntegratorConfig,
) -> Result<[Point; N], FlowError> {
    if cfg.horizon == 0.0 {
        return Ok(y0);
    }
    match cfg.method {
        Method::Rk4 { step } => rk4(field, y0, cfg.t0, cfg.horizon, step),
        Method::Rk45 { abs_tol, rel_tol } => dopri(field, y0, cfg.t0, cfg.horizon, abs_tol, rel_tol),
    }
}

#[inline]
fn eval<F: VelocityField + ?Sized, const N: usize>(field: &F, t: f64, y: &[Point; N]) -> Result<[Point; N], FlowError> {
    let mut k = [Point::ZERO; N];
    match field.velocities(t, y, &mut k) {
        Ok(()) => Ok(k),
        Err(_) => {
            // report the first particle that actually fails
            let position = y.iter().copied().find(|p| field.velocity(t, *p).is_err()).unwrap_or(y[0]);
            Err(FlowError::LeftDomain { t, position })
        }
    }
}

#[inline]
fn combine<const N: usize>(y: &[Point; N], h: f64, terms: &[(f64, &[Point; N])]) -> [Point; N] {
    let mut out = *y;
    for (n, o) in out.iter_mut().enumerate() {
        let mut dx = 0.0;
        let mut dy = 0.0;
        for (c, k) in terms {
            dx += c * k[n].x;
            dy += c * k[n].y;
        }
        o.x += h * dx;
        o.y += h * dy;
    }
    out
}

fn rk4<F: VelocityField + ?Sized, const N: usize>(
    field: &F,
    mut y: [Point; N],
    t0: f64,
    horizon: f64,
    step: f64,
) -> Result<[Point; N], FlowError> {
    let steps = libm::ceil(horizon.abs() / step).max(1.0) as usize;
    let h = horizon / steps as f64;
    for n in 0..steps {
        let t = t0 + n as f64 * h;
        let k1 = eval(field, t, &y)?;
        let k2 = eval(field, t + 0.5 * h, &combine(&y, 0.5 * h, &[(1.0, &k1)]))?;
        let k3 = eval(field, t + 0.5 * h, &combine(&y, 0.5 * h, &[(1.0, &k2)]))?;
        let k4 = eval(field, t + h, &combine(&y, h, &[(1.0, &k3)]))?;
        y = combine(&y, h / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
    }
    Ok(y)
}

fn dopri<F: VelocityField + ?Sized, const N: usize>(
    field: &F,
    mut y: [Point; N],
    t0: f64,
    horizon: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<[Point; N], FlowError> {
    let t_end = t0 + horizon;
    let dir = horizon.signum();
    let span = horizon.abs();
    let mut t = t0;
    let mut h = initial_step(field, &y, t0, span, abs_tol, rel_tol)?;
    let mut k1 = eval(field, t, &y)?;
    let min_step = 1e-12 * span.max(1.0);

    for _ in 0..MAX_STEPS {
        let remaining = (t_end - t) * dir;
        if remaining <= 1e-14 * span.max(1.0) {
            return Ok(y);
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        let k2 = eval(field, t + C2 * hs, &combine(&y, hs, &[(A21, &k1)]))?;
        let k3 = eval(field, t + C3 * hs, &combine(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = eval(field, t + C4 * hs, &combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = eval(field, t + C5 * hs, &combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let k6 = eval(
            field,
            t + hs,
            &combine(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = combine(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let t_new = if last { t_end } else { t + hs };
        let k7 = eval(field, t_new, &y_new)?;

        let mut err = 0.0_f64;
        for n in 0..N {
            let ex = hs * (E1 * k1[n].x + E3 * k3[n].x + E4 * k4[n].x + E5 * k5[n].x + E6 * k6[n].x + E7 * k7[n].x);
            let ey = hs * (E1 * k1[n].y + E3 * k3[n].y + E4 * k4[n].y + E5 * k5[n].y + E6 * k6[n].y + E7 * k7[n].y);
            let sx = abs_tol + rel_tol * y[n].x.abs().max(y_new[n].x.abs());
            let sy = abs_tol + rel_tol * y[n].y.abs().max(y_new[n].y.abs());
            err = err.max((ex / sx).abs()).max((ey / sy).abs());
        }
        if !err.is_finite() {
            return Err(FlowError::StepSizeUnderflow { t });
        }

        if err <= 1.0 {
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                return Ok(y);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            h = hs.abs() * factor;
        } else {
            h = hs.abs() * (0.9 * libm::pow(err, -0.2)).clamp(0.2, 1.0);
            if h < min_step {
                return Err(FlowError::StepSizeUnderflow { t });
            }
        }
    }
    Err(FlowError::TooManySteps { t })
}

/// Starting step in the spirit of Hairer, Nørsett & Wanner (II.4).
fn initial_step<F: VelocityField + ?Sized, const N: usize>(
    field: &F,
    y: &[Point; N],
    t0: f64,
    span: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, FlowError> {
    let f0 = eval(field, t0, y)?;
    let mut d0 = 0.0_f64;
    let mut d1 = 0.0_f64;
    for n in 0..N {
        let sx = abs_tol + rel_tol * y[n].x.abs();
        let sy = abs_tol + rel_tol * y[n].y.abs();
        d0 = d0.max((y[n].x / sx).abs()).max((y[n].y / sy).abs());
        d1 = d1.max((f0[n].x / sx).abs()).max((f0[n].y / sy).abs());
    }
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    Ok(h.min(0.1 * span).max(1e-10 * span))
}
