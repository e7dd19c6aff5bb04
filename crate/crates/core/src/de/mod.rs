//! Differential evolution (rand/1/bin) and the least-squares baseline fit.

mod result;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{ConcentrationSeries, DataError, PlasmaProfile};
use crate::model::{ConcentrationState, ModelVariant};
use crate::num::Real;
use crate::ode::{solve, InitialState, SolveConfig};
use crate::train::EstimationSpec;

pub use result::EstimationResult;

#[derive(Debug, Error)]
pub enum DeError {
    #[error("invalid differential evolution setup: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    /// Population size; `None` means ten per dimension.
    pub pop_size: Option<usize>,
    pub f: f64,
    pub cr: f64,
    pub max_generations: usize,
    /// Stop when the best value improves by less than this fraction over
    /// `stagnation_window` generations.
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
    pub seed: u64,
    /// Worker threads for objective evaluation.
    pub jobs: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            pop_size: None,
            f: 0.8,
            cr: 0.9,
            max_generations: 500,
            stagnation_tol: 1e-12,
            stagnation_window: 50,
            seed: 0,
            jobs: 1,
        }
    }
}

impl DeConfig {
    pub fn population(&self, dim: usize) -> usize {
        self.pop_size.unwrap_or(10 * dim)
    }

    pub fn validate(&self, dim: usize) -> Result<(), DeError> {
        let bad = |m: String| Err(DeError::InvalidConfig(m));
        if self.population(dim) < 4 {
            return bad(format!("population must be at least 4, got {}", self.population(dim)));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return bad(format!("mutation factor must lie in (0, 2], got {}", self.f));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad(format!("crossover rate must lie in [0, 1], got {}", self.cr));
        }
        if self.jobs == 0 {
            return bad("need at least one worker".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult<T> {
    pub best: Vec<T>,
    pub value: T,
    pub generations: usize,
    /// Best value after initialization and after every generation.
    pub history: Vec<T>,
    pub evaluations: usize,
}

/// Minimizes `objective` over the box `bounds`.
///
/// Trial vectors are drawn from one seeded generator in member order and
/// selection is applied after the whole generation has been evaluated, so
/// results do not depend on `jobs`.
pub fn differential_evolution<T: Real>(
    objective: impl Fn(&[T]) -> T + Sync,
    bounds: &[(T, T)],
    cfg: &DeConfig,
) -> Result<DeResult<T>, DeError> {
    let dim = bounds.len();
    if dim == 0 {
        return Err(DeError::InvalidConfig("no dimensions to search".into()));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(DeError::InvalidConfig("every bound needs lo < hi".into()));
    }
    cfg.validate(dim)?;
    let np = cfg.population(dim);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| DeError::InvalidConfig(e.to_string()))?;
    let evaluate = |xs: &[Vec<T>]| -> Vec<T> {
        let score = |x: &Vec<T>| {
            let v = objective(x);
            if v.is_nan() {
                T::infinity()
            } else {
                v
            }
        };
        if cfg.jobs == 1 {
            xs.iter().map(score).collect()
        } else {
            pool.install(|| xs.par_iter().map(score).collect())
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop: Vec<Vec<T>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * T::lit(rng.random::<f64>()))
                .collect()
        })
        .collect();
    let mut fit = evaluate(&pop);
    let mut evaluations = np;
    let argmin = |fit: &[T]| (0..fit.len()).fold(0, |b, i| if fit[i] < fit[b] { i } else { b });
    let mut best = argmin(&fit);
    let mut history = vec![fit[best]];
    let (f, cr) = (T::lit(cfg.f), cfg.cr);

    let mut generations = 0;
    while generations < cfg.max_generations {
        let trials: Vec<Vec<T>> = (0..np)
            .map(|i| {
                let [a, b, c] = distinct_three(&mut rng, np, i);
                let forced = rng.random_range(0..dim);
                (0..dim)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < cr {
                            let v = pop[a][j] + f * (pop[b][j] - pop[c][j]);
                            reflect(v, bounds[j].0, bounds[j].1)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let scores = evaluate(&trials);
        evaluations += np;
        for (i, (trial, score)) in trials.into_iter().zip(scores).enumerate() {
            if score <= fit[i] {
                pop[i] = trial;
                fit[i] = score;
            }
        }
        best = argmin(&fit);
        history.push(fit[best]);
        generations += 1;
        if fit[best] == T::zero() {
            break;
        }
        if generations >= cfg.stagnation_window {
            let old = history[generations - cfg.stagnation_window];
            if old - fit[best] <= T::lit(cfg.stagnation_tol) * old.abs() {
                break;
            }
        }
    }
    Ok(DeResult {
        best: pop[best].clone(),
        value: fit[best],
        generations,
        history,
        evaluations,
    })
}

fn distinct_three(rng: &mut ChaCha8Rng, np: usize, exclude: usize) -> [usize; 3] {
    let mut picks = [usize::MAX; 3];
    for k in 0..3 {
        loop {
            let r = rng.random_range(0..np);
            if r != exclude && !picks[..k].contains(&r) {
                picks[k] = r;
                break;
            }
        }
    }
    picks
}

/// Folds `x` back into `[lo, hi]` by mirroring at the bounds.
pub fn reflect<T: Real>(x: T, lo: T, hi: T) -> T {
    if x >= lo && x <= hi {
        return x;
    }
    let w = hi - lo;
    let two_w = w + w;
    let mut y = (x - lo) % two_w;
    if y < T::zero() {
        y += two_w;
    }
    if y > w {
        y = two_w - y;
    }
    (lo + y).max(lo).min(hi)
}

/// Sum of squared residuals over all compartments and times for the given
/// free values. Solver failures score `+∞`.
pub fn sse_objective<T: Real>(
    free_values: &[T],
    spec: &EstimationSpec<T>,
    dataset: &ConcentrationSeries<T>,
    plasma: &PlasmaProfile<T>,
    variant: ModelVariant,
    solver: &SolveConfig<T>,
) -> T {
    let params = spec.params_with(free_values);
    let init = InitialState {
        y0: ConcentrationState(dataset.state(0).0.map(|c| c.max(T::zero()))),
        t0: dataset.times()[0],
    };
    match solve(&params, plasma, variant, &init, solver) {
        Ok(pred) => pred
            .columns()
            .iter()
            .zip(dataset.columns())
            .flat_map(|(p, d)| p.iter().zip(d).map(|(&a, &b)| (a - b) * (a - b)))
            .sum(),
        Err(_) => T::infinity(),
    }
}

/// DOPRI45 at `rtol = 1e-9` on the dataset grid.
pub fn default_de_solver<T: Real>(times: &[T]) -> SolveConfig<T> {
    SolveConfig::dopri45(T::lit(1e-9), T::lit(1e-13), times.to_vec())
}

/// Fits the free parameters of `spec` to `dataset` by differential
/// evolution on the SSE objective.
pub fn fit_de<T: Real>(
    dataset: &ConcentrationSeries<T>,
    spec: &EstimationSpec<T>,
    variant: ModelVariant,
    cfg: &DeConfig,
    solver: &SolveConfig<T>,
) -> Result<(EstimationResult, DeResult<T>), DeError> {
    let plasma = dataset.plasma_profile()?;
    let clock = Instant::now();
    let bounds: Vec<(T, T)> = spec.free.iter().map(|p| (p.min, p.max)).collect();
    let de = differential_evolution(|x| sse_objective(x, spec, dataset, &plasma, variant, solver), &bounds, cfg)?;
    let result = EstimationResult {
        method: "DE".into(),
        names: spec.names(),
        values: de.best.iter().map(|v| v.as_f64()).collect(),
        reference: None,
        objective: de.value.as_f64(),
        seconds: clock.elapsed().as_secs_f64(),
    };
    Ok((result, de))
}
