use std::collections::VecDeque;

use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig<T> {
    pub max_iters: usize,
    /// Stop when the largest gradient component falls below this.
    pub tolerance: T,
    pub history: usize,
}

impl<T: Real> Default for LbfgsConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tolerance: T::lit(1e-12),
            history: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult<T> {
    /// Best point seen.
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    /// The line search could not decrease the loss along any direction.
    pub line_search_failed: bool,
}

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 50;

/// Limited-memory BFGS with a backtracking Armijo line search.
///
/// `f` returns the value and gradient at a point; non-finite values are
/// treated as `+∞`. `observe` is called after every accepted step with the
/// iteration number, the new point and its value. The returned point never
/// has a larger value than `start`.
pub fn lbfgs_refine<T: Real>(
    mut f: impl FnMut(&[T]) -> (T, Vec<T>),
    start: &[T],
    cfg: &LbfgsConfig<T>,
    mut observe: impl FnMut(usize, &[T], T),
) -> LbfgsResult<T> {
    let n = start.len();
    let mut x = start.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LbfgsResult {
            x,
            value: fx,
            iterations: 0,
            line_search_failed: true,
        };
    }
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(cfg.history);
    let mut failed = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if inf_norm(&g) <= cfg.tolerance {
            break;
        }
        let mut d = two_loop(&g, &history);
        let mut slope = dot(&d, &g);
        if !(slope < T::zero()) {
            history.clear();
            d = g.iter().map(|&v| -v).collect();
            slope = dot(&d, &g);
        }
        // Without curvature information, start with a unit-length step.
        let mut alpha = if history.is_empty() {
            (T::one() / l2(&d)).min(T::one())
        } else {
            T::one()
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<T> = x.iter().zip(&d).map(|(&xi, &di)| xi + alpha * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + T::lit(ARMIJO) * alpha * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= T::lit(SHRINK);
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if history.is_empty() {
                failed = true;
                break;
            }
            // Retry from steepest descent before giving up.
            history.clear();
            continue;
        };
        let s: Vec<T> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::lit(1e-12) * l2(&s) * l2(&y) && sy > T::zero() {
            if history.len() == cfg.history {
                history.pop_front();
            }
            history.push_back((s, y, T::one() / sy));
        }
        iterations += 1;
        let stalled = f_new == fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        observe(iterations, &x, fx);
        if stalled && n > 0 {
            break;
        }
    }
    LbfgsResult {
        x,
        value: fx,
        iterations,
        line_search_failed: failed,
    }
}

fn two_loop<T: Real>(g: &[T], history: &VecDeque<(Vec<T>, Vec<T>, T)>) -> Vec<T> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = *rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, &yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, &si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn l2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn inf_norm<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}
