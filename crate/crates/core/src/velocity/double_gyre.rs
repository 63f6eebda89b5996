use core::f64::consts::PI;

use super::{VelocityError, VelocityField};
use crate::geometry::Point;

/// Periodically forced double gyre on `[0, 2] × [0, 1]`.
///
/// ```text
/// f(t, x) = ε sin(ωt) x² + (1 − 2ε sin(ωt)) x
/// ẋ = −πA sin(π f) cos(π y)
/// ẏ =  πA cos(π f) sin(π y) ∂ₓf
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGyre {
    pub amplitude: f64,
    pub epsilon: f64,
    pub omega: f64,
}

impl Default for DoubleGyre {
    fn default() -> Self {
        DoubleGyre { amplitude: 0.2, epsilon: 0.2, omega: PI / 5.0 }
    }
}

impl DoubleGyre {
    pub fn new(amplitude: f64, epsilon: f64, omega: f64) -> Result<Self, VelocityError> {
        if !(amplitude > 0.0) {
            return Err(VelocityError::InvalidGrid("double gyre amplitude must be positive"));
        }
        if !(0.0..0.5).contains(&epsilon) {
            return Err(VelocityError::InvalidGrid("double gyre epsilon must lie in [0, 0.5)"));
        }
        if !(omega > 0.0) {
            return Err(VelocityError::InvalidGrid("double gyre omega must be positive"));
        }
        Ok(DoubleGyre { amplitude, epsilon, omega })
    }

    #[inline]
    fn eval(&self, forcing: f64, p: Point) -> Point {
        let a = self.epsilon * forcing;
        let b = 1.0 - 2.0 * a;
        let f = a * p.x * p.x + b * p.x;
        let dfdx = 2.0 * a * p.x + b;
        let (sf, cf) = libm::sincos(PI * f);
        let (sy, cy) = libm::sincos(PI * p.y);
        let pa = PI * self.amplitude;
        Point::new(-pa * sf * cy, pa * cf * sy * dfdx)
    }
}

impl VelocityField for DoubleGyre {
    fn velocity(&self, t: f64, p: Point) -> Result<Point, VelocityError> {
        Ok(self.eval(libm::sin(self.omega * t), p))
    }

    fn velocities(&self, t: f64, ps: &[Point], out: &mut [Point]) -> Result<(), VelocityError> {
        let forcing = libm::sin(self.omega * t);
        for (p, o) in ps.iter().zip(out.iter_mut()) {
            *o = self.eval(forcing, *p);
        }
        Ok(())
    }
}
