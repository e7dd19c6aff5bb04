//! Matrix exponential and the exact propagator for piecewise-linear forcing.

use std::collections::HashMap;

use ndarray::Array2;

use crate::data::PlasmaProfile;
use crate::model::{ConcentrationState, SystemMatrix, SystemParams};
use crate::num::Real;

use super::SolveError;

/// Padé(13, 13) numerator coefficients; the denominator uses the same with
/// alternating signs.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which Padé(13) is accurate to unit roundoff in double
/// precision without scaling.
const THETA13: f64 = 5.371920351148152;

/// `exp(A)` by scaling and squaring with a Padé(13) approximant.
pub fn expm<T: Real>(a: &Array2<T>) -> Array2<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = one_norm(a).as_f64();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|x| x / T::lit(2f64.powi(squarings)));

    let b = |i: usize| T::lit(PADE13[i]);
    let eye = Array2::<T>::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = scaled.dot(&(a6.dot(&u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &eye * b(1)));
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &eye * b(0);

    let mut result = solve(&v - &u, &v + &u);
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

fn one_norm<T: Real>(a: &Array2<T>) -> T {
    a.columns()
        .into_iter()
        .map(|c| c.iter().fold(T::zero(), |s, x| s + x.abs()))
        .fold(T::zero(), T::max)
}

/// Solves `P X = Q` by Gaussian elimination with partial pivoting.
fn solve<T: Real>(mut p: Array2<T>, mut q: Array2<T>) -> Array2<T> {
    let n = p.nrows();
    let m = q.ncols();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| p[[i, col]].abs().partial_cmp(&p[[j, col]].abs()).unwrap())
            .unwrap();
        if pivot != col {
            for j in 0..n {
                p.swap([col, j], [pivot, j]);
            }
            for j in 0..m {
                q.swap([col, j], [pivot, j]);
            }
        }
        let d = p[[col, col]];
        for row in col + 1..n {
            let f = p[[row, col]] / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = p[[col, j]];
                p[[row, j]] -= f * v;
            }
            for j in 0..m {
                let v = q[[col, j]];
                q[[row, j]] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..m {
            let mut s = q[[col, j]];
            for k in col + 1..n {
                s -= p[[col, k]] * q[[k, j]];
            }
            q[[col, j]] = s / p[[col, col]];
        }
    }
    q
}

/// State transition over one interval of length Δ, together with the
/// responses to unit forcing in the first compartment.
struct Transition<T> {
    phi: Array2<T>,
    /// `∫₀^Δ e^{A(Δ−s)} e₁ ds`
    constant: [T; 4],
    /// `∫₀^Δ e^{A(Δ−s)} e₁ s ds`
    ramp: [T; 4],
}

fn transition<T: Real>(a: &SystemMatrix<T>, dt: T) -> Transition<T> {
    // Augmented generator [[A, e₁, 0], [0, 0, 1], [0, 0, 0]]: starting from
    // (0, 1, 0) the first block accumulates the constant response, from
    // (0, 0, 1) the ramp response.
    let mut m = Array2::<T>::zeros((6, 6));
    for i in 0..4 {
        for j in 0..4 {
            m[[i, j]] = a.0[i][j] * dt;
        }
    }
    m[[0, 4]] = dt;
    m[[4, 5]] = dt;
    let e = expm(&m);
    Transition {
        phi: e.slice(ndarray::s![0..4, 0..4]).to_owned(),
        constant: std::array::from_fn(|i| e[[i, 4]]),
        ramp: std::array::from_fn(|i| e[[i, 5]]),
    }
}

/// Exact solution of `Y' = A·Y + (Qbrain/Vbb)·C_art(t)·e₁` on `grid`,
/// starting from `y0` at `t0`.
///
/// The horizon is split at every plasma knot so that the forcing is affine
/// on each piece, and every piece is advanced with the closed-form
/// propagator.
pub fn expm_propagate<T: Real>(
    a: &SystemMatrix<T>,
    y0: &ConcentrationState<T>,
    t0: T,
    plasma: &PlasmaProfile<T>,
    sys: &SystemParams<T>,
    grid: &[T],
) -> Result<Vec<ConcentrationState<T>>, SolveError> {
    let gain = sys.Qbrain / sys.Vbb;
    let mut cache: HashMap<u64, Transition<T>> = HashMap::new();
    let mut y = y0.0;
    let mut t = t0;
    let mut out = Vec::with_capacity(grid.len());
    let knots = plasma.times();
    let mut next_knot = knots.partition_point(|&k| k <= t0);

    for &target in grid {
        while t < target {
            while next_knot < knots.len() && knots[next_knot] <= t {
                next_knot += 1;
            }
            let end = match knots.get(next_knot) {
                Some(&k) if k < target => k,
                _ => target,
            };
            let dt = end - t;
            let c0 = plasma.interp(t);
            let slope = (plasma.interp(end) - c0) / dt;
            let tr = cache.entry(dt.as_f64().to_bits()).or_insert_with(|| transition(a, dt));
            let mut next = [T::zero(); 4];
            for i in 0..4 {
                let mut acc = T::zero();
                for j in 0..4 {
                    acc += tr.phi[[i, j]] * y[j];
                }
                next[i] = acc + gain * (c0 * tr.constant[i] + slope * tr.ramp[i]);
            }
            y = next;
            t = end;
        }
        let state = ConcentrationState(y);
        if !state.is_finite() {
            return Err(SolveError::NonFiniteState { t: t.as_f64() });
        }
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_matrix_gives_identity() {
        let e = expm(&Array2::<f64>::zeros((4, 4)));
        assert_eq!(e, Array2::<f64>::eye(4));
    }

    #[test]
    fn diagonal_and_rotation() {
        let e = expm(&array![[1.0, 0.0], [0.0, -2.0]]);
        assert!((e[[0, 0]] - 1f64.exp()).abs() < 1e-14);
        assert!((e[[1, 1]] - (-2f64).exp()).abs() < 1e-15);
        let th: f64 = 0.7;
        let r = expm(&array![[0.0, -th], [th, 0.0]]);
        assert!((r[[0, 0]] - th.cos()).abs() < 1e-15);
        assert!((r[[1, 0]] - th.sin()).abs() < 1e-15);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let e = expm(&array![[-300.0, 0.0], [1.0, -0.5]]);
        // Lower-left entry: ∫ e^{-0.5(1-s)} e^{-300 s} ds.
        let exact = ((-0.5f64).exp() - (-300f64).exp()) / 299.5;
        assert!((e[[1, 0]] - exact).abs() / exact < 1e-12);
        assert!((e[[1, 1]] - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn nilpotent_matches_series() {
        let e = expm(&array![[0.0f64, 2.0, 0.0], [0.0, 0.0, 3.0], [0.0, 0.0, 0.0]]);
        assert_eq!(e[[0, 1]], 2.0);
        assert!((e[[0, 2]] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn single_precision() {
        let e = expm(&array![[-1.0f32, 0.5], [0.0, -2.0]]);
        assert!((e[[0, 0]] - (-1f32).exp()).abs() < 1e-6);
    }

    fn sys_unit() -> SystemParams<f64> {
        let mut s = SystemParams::default();
        s.Qbrain = 1.0;
        s.Vbb = 1.0;
        s
    }

    #[test]
    fn decoupled_decay() {
        let mut a = SystemMatrix([[0.0; 4]; 4]);
        for i in 0..4 {
            a.0[i][i] = -1.0;
        }
        let plasma = PlasmaProfile::constant(0.0, 1.0, 0.0).unwrap();
        let y0 = ConcentrationState::new(1.0, 0.0, 0.0, 0.0);
        let out = expm_propagate(&a, &y0, 0.0, &plasma, &sys_unit(), &[1.0]).unwrap();
        assert!((out[0].cbb() - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(&out[0].0[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn pure_integration_of_constant_forcing() {
        let a = SystemMatrix([[0.0; 4]; 4]);
        let plasma = PlasmaProfile::constant(0.0, 10.0, 0.75).unwrap();
        let y0 = ConcentrationState::new(0.5, 0.1, 0.2, 0.3);
        let out = expm_propagate(&a, &y0, 0.0, &plasma, &sys_unit(), &[2.0]).unwrap();
        assert!((out[0].cbb() - (0.5 + 2.0 * 0.75)).abs() < 1e-15);
        assert_eq!(&out[0].0[1..], &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn ramp_forcing_integrates_exactly() {
        // y' = C_art(t) with C_art a hat function; y(t) is its integral.
        let a = SystemMatrix([[0.0; 4]; 4]);
        let plasma = PlasmaProfile::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        let out = expm_propagate(&a, &ConcentrationState::zero(), 0.0, &plasma, &sys_unit(), &[0.5, 2.0, 3.0, 4.0]).unwrap();
        let expected = [0.25, 1.0 + 1.5, 3.0, 3.0];
        for (o, e) in out.iter().zip(expected) {
            assert!((o.cbb() - e).abs() < 1e-14, "{} vs {e}", o.cbb());
        }
    }
}
