use crate::num::Real;

use super::TrainError;

/// Moment estimates for Adam over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            step: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }
}

/// One bias-corrected Adam update of `params`. A non-finite gradient leaves
/// both the state and the parameters untouched.
pub fn adam_step<T: Real>(state: &mut AdamState<T>, params: &mut [T], grads: &[T], lr: T) -> Result<(), TrainError> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(state.m.len(), grads.len());
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient {
            iter: state.step as usize,
            detail: format!("coordinate {i}"),
        });
    }
    state.step += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let k = state.step as i32;
    let c1 = T::one() - b1.powi(k);
    let c2 = T::one() - b2.powi(k);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (T::one() - b1) * g;
        state.v[i] = b2 * state.v[i] + (T::one() - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_closed_form() {
        let mut s = AdamState::new(1);
        let mut x = [0.0f64];
        adam_step(&mut s, &mut x, &[0.5], 1e-4).unwrap();
        let expected = -1e-4 * 0.5 / (0.5 + 1e-8);
        assert!((x[0] - expected).abs() < 1e-20);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = AdamState::new(3);
        let mut x = [1.0f64, -2.0, 3.0];
        for _ in 0..100 {
            adam_step(&mut s, &mut x, &[0.0; 3], 0.1).unwrap();
        }
        assert_eq!(x, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut s = AdamState::new(2);
        let mut x = [3.0f64, -1.0];
        for _ in 0..5000 {
            let g = [2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)];
            adam_step(&mut s, &mut x, &g, 1e-2).unwrap();
        }
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] + 2.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_nan() {
        let mut s = AdamState::new(2);
        let mut x = [1.0f64, 1.0];
        assert!(adam_step(&mut s, &mut x, &[0.1, f64::NAN], 0.1).is_err());
        assert_eq!(x, [1.0, 1.0]);
        assert_eq!(s.step, 0);
    }
}
