//! Forward solvers for the brain model and synthetic data generation.

mod dopri;
mod expm;
mod rk4;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ConcentrationSeries, DataError, PlasmaProfile};
use crate::model::{assemble_matrix, forcing_gain, ConcentrationState, ModelParams, ModelVariant, SystemMatrix};
use crate::num::Real;

pub use dopri::{dopri45, MIN_STEP};
pub use expm::{expm, expm_propagate};
pub use rk4::rk4;
pub use synth::{add_noise, synthesize_dataset, PlasmaSpec};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("adaptive step fell to {h:e} h at t = {t}")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// A first-order system `y' = f(t, y)`.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);
}

/// Adapts a closure to [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T, F: Fn(T, &[T], &mut [T])> OdeSystem<T> for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) {
        (self.f)(t, y, dy)
    }
}

/// The brain model with a fixed parameter set and plasma forcing.
pub struct PbpkSystem<'a, T> {
    matrix: SystemMatrix<T>,
    gain: T,
    plasma: &'a PlasmaProfile<T>,
}

impl<'a, T: Real> PbpkSystem<'a, T> {
    pub fn new(params: &ModelParams<T>, plasma: &'a PlasmaProfile<T>, variant: ModelVariant) -> Self {
        Self {
            matrix: assemble_matrix(params, variant),
            gain: forcing_gain(params),
            plasma,
        }
    }

    pub fn matrix(&self) -> &SystemMatrix<T> {
        &self.matrix
    }
}

impl<T: Real> OdeSystem<T> for PbpkSystem<'_, T> {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) {
        let a = &self.matrix.0;
        for i in 0..4 {
            dy[i] = a[i][0] * y[0] + a[i][1] * y[1] + a[i][2] * y[2] + a[i][3] * y[3];
        }
        dy[0] += self.gain * self.plasma.interp(t);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Rk4,
    Dopri45,
    #[default]
    ExpmOracle,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::Rk4 => "rk4",
            SolveMethod::Dopri45 => "dopri45",
            SolveMethod::ExpmOracle => "expm",
        })
    }
}

impl FromStr for SolveMethod {
    type Err = SolveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(SolveMethod::Rk4),
            "dopri45" | "dopri" | "rk45" => Ok(SolveMethod::Dopri45),
            "expm" | "expm-oracle" | "exact" => Ok(SolveMethod::ExpmOracle),
            other => Err(SolveError::InvalidConfig(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig<T> {
    pub method: SolveMethod,
    /// Nominal RK4 step (h).
    pub step: T,
    pub rel_tol: T,
    pub abs_tol: T,
    /// Output times (h).
    pub grid: Vec<T>,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(method: SolveMethod, grid: Vec<T>) -> Self {
        Self {
            method,
            step: T::lit(1e-3),
            rel_tol: T::lit(1e-9),
            abs_tol: T::lit(1e-12),
            grid,
        }
    }

    pub fn rk4(step: T, grid: Vec<T>) -> Self {
        Self { step, ..Self::new(SolveMethod::Rk4, grid) }
    }

    pub fn dopri45(rel_tol: T, abs_tol: T, grid: Vec<T>) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::new(SolveMethod::Dopri45, grid)
        }
    }

    pub fn expm(grid: Vec<T>) -> Self {
        Self::new(SolveMethod::ExpmOracle, grid)
    }

    /// Uniform grid of `n` points over `[0, horizon]`.
    pub fn uniform_grid(n: usize, horizon: T) -> Vec<T> {
        if n == 1 {
            return vec![T::zero()];
        }
        let last = T::from_usize(n - 1).unwrap();
        (0..n).map(|i| horizon * T::from_usize(i).unwrap() / last).collect()
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.into()));
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return bad("step must be positive");
        }
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero()) {
            return bad("tolerances must be positive");
        }
        if self.grid.iter().any(|t| !t.is_finite()) {
            return bad("output grid must be finite");
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("output grid must be strictly increasing");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState<T> {
    pub y0: ConcentrationState<T>,
    pub t0: T,
}

impl<T: Real> InitialState<T> {
    pub fn zero() -> Self {
        Self {
            y0: ConcentrationState::zero(),
            t0: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !self.t0.is_finite() || !self.y0.is_finite() || self.y0.0.iter().any(|&c| c < T::zero()) {
            return Err(SolveError::InvalidConfig("initial state must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Solves the model on `cfg.grid` and returns the sampled series.
///
/// The plasma column of the result holds `C_art` at the output times.
pub fn solve<T: Real>(
    params: &ModelParams<T>,
    plasma: &PlasmaProfile<T>,
    variant: ModelVariant,
    init: &InitialState<T>,
    cfg: &SolveConfig<T>,
) -> Result<ConcentrationSeries<T>, SolveError> {
    cfg.validate()?;
    init.validate()?;
    if cfg.grid.first().is_some_and(|&t| t < init.t0) {
        return Err(SolveError::InvalidConfig("output grid starts before t0".into()));
    }
    let sys = PbpkSystem::new(params, plasma, variant);
    let states: Vec<ConcentrationState<T>> = match cfg.method {
        SolveMethod::Rk4 => to_states(rk4(&sys, init.t0, &init.y0.0, &cfg.grid, cfg.step)?),
        SolveMethod::Dopri45 => to_states(dopri45(&sys, init.t0, &init.y0.0, &cfg.grid, cfg.rel_tol, cfg.abs_tol)?),
        SolveMethod::ExpmOracle => expm_propagate(sys.matrix(), &init.y0, init.t0, plasma, &params.system, &cfg.grid)?,
    };
    let plasma_col = cfg.grid.iter().map(|&t| plasma.interp(t)).collect();
    Ok(ConcentrationSeries::from_states(cfg.grid.clone(), &states, Some(plasma_col))?)
}

fn to_states<T: Copy>(rows: Vec<Vec<T>>) -> Vec<ConcentrationState<T>> {
    rows.into_iter().map(|r| ConcentrationState([r[0], r[1], r[2], r[3]])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_and_zero_plasma_stay_zero() {
        let params = ModelParams::<f64>::default();
        let plasma = PlasmaProfile::constant(0.0, 48.0, 0.0).unwrap();
        let grid = SolveConfig::uniform_grid(49, 48.0);
        for cfg in [
            SolveConfig::rk4(0.01, grid.clone()),
            SolveConfig::dopri45(1e-8, 1e-12, grid.clone()),
            SolveConfig::expm(grid.clone()),
        ] {
            let s = solve(&params, &plasma, ModelVariant::Literal, &InitialState::zero(), &cfg).unwrap();
            assert!(s.columns().iter().flatten().all(|&c| c == 0.0), "{}", cfg.method);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let grid = vec![0.0, 1.0, 1.0];
        assert!(SolveConfig::<f64>::expm(grid).validate().is_err());
        assert!(SolveConfig::<f64>::rk4(0.0, vec![0.0, 1.0]).validate().is_err());
        assert!(SolveConfig::<f64>::dopri45(-1.0, 1e-9, vec![0.0]).validate().is_err());
    }

    #[test]
    fn uniform_grid_endpoints() {
        let g = SolveConfig::<f64>::uniform_grid(200, 48.0);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[199], 48.0);
    }

    #[test]
    fn method_names_parse() {
        for m in [SolveMethod::Rk4, SolveMethod::Dopri45, SolveMethod::ExpmOracle] {
            assert_eq!(m.to_string().parse::<SolveMethod>().unwrap(), m);
        }
    }
}
