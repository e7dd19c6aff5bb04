use crate::num::Real;

use super::{OdeSystem, SolveError};

/// Classic four-stage Runge–Kutta with a nominal step `h`.
///
/// Each output interval `[a, b]` is split into `ceil((b - a) / h)` equal
/// steps so that the integration lands exactly on every output time.
/// Returns one state per grid point.
pub fn rk4<T: Real, S: OdeSystem<T>>(sys: &S, t0: T, y0: &[T], grid: &[T], h: T) -> Result<Vec<Vec<T>>, SolveError> {
    let n = sys.dim();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);

    let mut out = Vec::with_capacity(grid.len());
    for &target in grid {
        let span = target - t;
        if span > T::zero() {
            // Guard against `span / h` being a hair above an integer.
            let steps = ((span / h) - T::lit(1e-9)).ceil().max(T::one());
            let count = steps.to_usize().unwrap_or(1);
            let dt = span / steps;
            let start = t;
            for k in 0..count {
                let tk = start + T::from_usize(k).unwrap() * dt;
                sys.rhs(tk, &y, &mut k1);
                for i in 0..n {
                    tmp[i] = y[i] + half * dt * k1[i];
                }
                sys.rhs(tk + half * dt, &tmp, &mut k2);
                for i in 0..n {
                    tmp[i] = y[i] + half * dt * k2[i];
                }
                sys.rhs(tk + half * dt, &tmp, &mut k3);
                for i in 0..n {
                    tmp[i] = y[i] + dt * k3[i];
                }
                sys.rhs(tk + dt, &tmp, &mut k4);
                for i in 0..n {
                    y[i] += dt * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
                }
            }
            t = target;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::NonFiniteState { t: t.as_f64() });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::FnSystem;

    #[test]
    fn exponential_decay_to_one_hour() {
        let sys = FnSystem::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let out = rk4(&sys, 0.0, &[1.0], &[1.0], 0.001).unwrap();
        assert!((out[0][0] - (-1.0f64).exp()).abs() < 1e-9);
        assert!((out[0][0] - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn lands_on_grid_points_including_start() {
        let sys = FnSystem::new(1, |t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 3.0 * t * t);
        let grid = [0.0, 0.3, 0.7, 2.0];
        let out = rk4(&sys, 0.0, &[0.0], &grid, 0.25).unwrap();
        // RK4 is exact for cubic quadrature.
        for (g, y) in grid.iter().zip(&out) {
            assert!((y[0] - g * g * g).abs() < 1e-12);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = FnSystem::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let err = rk4(&sys, 0.0, &[1.0], &[5.0], 0.01).unwrap_err();
        assert!(matches!(err, SolveError::NonFiniteState { .. }));
    }
}
