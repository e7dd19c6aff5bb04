//! Dormand–Prince 5(4) with embedded error control.

use crate::num::Real;

use super::{OdeSystem, SolveError};

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
pub const MIN_STEP: f64 = 1e-12;
const MAX_STEPS: usize = 50_000_000;

/// Integrates through every output time and returns the state there.
///
/// Steps are shortened to land exactly on output times, so kinks in a
/// forcing that is piecewise linear on the output grid never fall inside a
/// step.
pub fn dopri45<T: Real, S: OdeSystem<T>>(
    sys: &S,
    t0: T,
    y0: &[T],
    grid: &[T],
    rel_tol: T,
    abs_tol: T,
) -> Result<Vec<Vec<T>>, SolveError> {
    let n = sys.dim();
    let c = |x: f64| T::lit(x);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k = vec![vec![T::zero(); n]; 7];
    let mut stage = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    let mut out = Vec::with_capacity(grid.len());

    sys.rhs(t, &y, &mut k[0]);
    let mut h = initial_step(sys, t, &y, &k[0], rel_tol, abs_tol);
    let mut steps = 0usize;
    let min_step = c(MIN_STEP);

    for &target in grid {
        while t < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(SolveError::TooManySteps { t: t.as_f64() });
            }
            let remaining = target - t;
            let last = h >= remaining;
            let dt = if last { remaining } else { h };

            macro_rules! combine {
                ($dst:expr, $( ($coef:expr, $idx:expr) ),+ ) => {
                    for i in 0..n {
                        let mut acc = T::zero();
                        $( acc += c($coef) * k[$idx][i]; )+
                        $dst[i] = y[i] + dt * acc;
                    }
                };
            }

            combine!(stage, (A21, 0));
            sys.rhs(t + c(C2) * dt, &stage, &mut k[1]);
            combine!(stage, (A31, 0), (A32, 1));
            sys.rhs(t + c(C3) * dt, &stage, &mut k[2]);
            combine!(stage, (A41, 0), (A42, 1), (A43, 2));
            sys.rhs(t + c(C4) * dt, &stage, &mut k[3]);
            combine!(stage, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
            sys.rhs(t + c(C5) * dt, &stage, &mut k[4]);
            combine!(stage, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
            sys.rhs(t + dt, &stage, &mut k[5]);
            combine!(y_new, (A71, 0), (A73, 2), (A74, 3), (A75, 4), (A76, 5));
            let t_new = if last { target } else { t + dt };
            sys.rhs(t_new, &y_new, &mut k[6]);

            let mut err = T::zero();
            for i in 0..n {
                let e = dt
                    * (c(E1) * k[0][i] + c(E3) * k[2][i] + c(E4) * k[3][i] + c(E5) * k[4][i] + c(E6) * k[5][i] + c(E7) * k[6][i]);
                let scale = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
                let r = e / scale;
                err += r * r;
            }
            err = (err / T::from_usize(n).unwrap()).sqrt();
            if !err.is_finite() {
                err = T::infinity();
            }

            if err <= T::one() {
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(SolveError::NonFiniteState { t: t.as_f64() });
                }
                let fac = if err == T::zero() {
                    c(FAC_MAX)
                } else {
                    (c(SAFETY) * err.powf(c(-0.2))).min(c(FAC_MAX)).max(c(FAC_MIN))
                };
                // A step shortened to hit the grid says little about the
                // natural step size; keep the larger of the two.
                h = if last { h.max(dt * fac) } else { dt * fac };
            } else {
                let fac = if err.is_finite() {
                    (c(SAFETY) * err.powf(c(-0.2))).max(c(FAC_MIN))
                } else {
                    c(FAC_MIN)
                };
                h = dt * fac;
            }
            if h < min_step {
                return Err(SolveError::StepSizeUnderflow { t: t.as_f64(), h: h.as_f64() });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

/// Starting step estimate (Hairer, Nørsett & Wanner, II.4).
fn initial_step<T: Real, S: OdeSystem<T>>(sys: &S, t: T, y: &[T], f0: &[T], rel_tol: T, abs_tol: T) -> T {
    let n = sys.dim();
    let nt = T::from_usize(n).unwrap();
    let norm = |v: &[T]| -> T {
        let s: T = v
            .iter()
            .zip(y)
            .map(|(&vi, &yi)| {
                let r = vi / (abs_tol + rel_tol * yi.abs());
                r * r
            })
            .sum();
        (s / nt).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let tiny = T::lit(1e-5);
    let h0 = if d0 < tiny || d1 < tiny { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    let y1: Vec<T> = y.iter().zip(f0).map(|(&yi, &fi)| yi + h0 * fi).collect();
    let mut f1 = vec![T::zero(); n];
    sys.rhs(t + h0, &y1, &mut f1);
    let diff: Vec<T> = f1.iter().zip(f0).map(|(&a, &b)| (a - b) / h0).collect();
    let d2 = norm(&diff);
    let h1 = if d1.max(d2) <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / d1.max(d2)).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h0).min(h1).max(T::lit(MIN_STEP) * T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::FnSystem;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = FnSystem::new(2, |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let tau = std::f64::consts::TAU;
        let out = dopri45(&sys, 0.0, &[1.0, 0.0], &[tau / 4.0, tau], 1e-10, 1e-12).unwrap();
        assert!(out[0][0].abs() < 1e-8);
        assert!((out[0][1] + 1.0).abs() < 1e-8);
        assert!((out[1][0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn tolerance_controls_error() {
        let sys = FnSystem::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let exact = (-5.0f64).exp();
        let loose = dopri45(&sys, 0.0, &[1.0], &[5.0], 1e-4, 1e-8).unwrap()[0][0];
        let tight = dopri45(&sys, 0.0, &[1.0], &[5.0], 1e-10, 1e-14).unwrap()[0][0];
        assert!((tight - exact).abs() < (loose - exact).abs());
        assert!((tight - exact).abs() / exact < 1e-8);
    }

    #[test]
    fn finite_time_blow_up_underflows_step() {
        let sys = FnSystem::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let err = dopri45(&sys, 0.0, &[1.0], &[2.0], 1e-8, 1e-10).unwrap_err();
        assert!(
            matches!(err, SolveError::StepSizeUnderflow { .. } | SolveError::NonFiniteState { .. }),
            "{err:?}"
        );
    }
}
