//! Synthetic datasets from a reference parameter set.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{ConcentrationSeries, PlasmaProfile};
use crate::model::{ModelParams, ModelVariant};
use crate::num::Real;

use super::{solve, InitialState, SolveConfig, SolveError};

/// Oral-absorption shaped plasma curve `D·(e^{−ke·t} − e^{−ka·t})`, with `D`
/// chosen so that the peak equals `peak`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaSpec {
    /// Absorption rate (1/h).
    pub ka: f64,
    /// Elimination rate (1/h).
    pub ke: f64,
    /// Peak concentration (mg/L).
    pub peak: f64,
}

impl Default for PlasmaSpec {
    fn default() -> Self {
        Self {
            ka: 1.0,
            ke: 0.1,
            peak: 0.06,
        }
    }
}

impl PlasmaSpec {
    pub fn zero() -> Self {
        Self { peak: 0.0, ..Self::default() }
    }

    pub fn tmax(&self) -> f64 {
        (self.ka / self.ke).ln() / (self.ka - self.ke)
    }

    /// Amplitude `D`.
    pub fn scale(&self) -> f64 {
        let tm = self.tmax();
        let shape = (-self.ke * tm).exp() - (-self.ka * tm).exp();
        self.peak / shape
    }

    pub fn value(&self, t: f64) -> f64 {
        self.scale() * ((-self.ke * t).exp() - (-self.ka * t).exp())
    }

    /// Samples the curve on `grid`.
    pub fn sample<T: Real>(&self, grid: &[T]) -> Result<PlasmaProfile<T>, SolveError> {
        if !(self.ka > 0.0 && self.ke > 0.0 && self.ka != self.ke && self.peak >= 0.0) {
            return Err(SolveError::InvalidConfig(
                "plasma rates must be positive and distinct, peak non-negative".into(),
            ));
        }
        let values = grid.iter().map(|&t| T::lit(self.value(t.as_f64()).max(0.0))).collect();
        Ok(PlasmaProfile::new(grid.to_vec(), values)?)
    }
}

/// Uniform-grid dataset from the exact propagator, with optional Gaussian
/// noise clamped at zero. The plasma column is left noise-free.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_dataset<T: Real>(
    params: &ModelParams<T>,
    plasma_spec: &PlasmaSpec,
    variant: ModelVariant,
    n_points: usize,
    horizon: T,
    noise_sd: T,
    seed: u64,
) -> Result<ConcentrationSeries<T>, SolveError> {
    if n_points < 2 {
        return Err(SolveError::InvalidConfig(format!("need at least 2 points, got {n_points}")));
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(SolveError::InvalidConfig("horizon must be positive".into()));
    }
    if !(noise_sd >= T::zero()) || !noise_sd.is_finite() {
        return Err(SolveError::InvalidConfig("noise sd must be non-negative".into()));
    }
    let grid = SolveConfig::uniform_grid(n_points, horizon);
    let plasma = plasma_spec.sample(&grid)?;
    let clean = solve(params, &plasma, variant, &InitialState::zero(), &SolveConfig::expm(grid))?;
    add_noise(clean, noise_sd, seed)
}

/// Adds seeded Gaussian noise to every compartment value, clamping at zero.
/// The plasma column is untouched.
pub fn add_noise<T: Real>(series: ConcentrationSeries<T>, noise_sd: T, seed: u64) -> Result<ConcentrationSeries<T>, SolveError> {
    if noise_sd == T::zero() {
        return Ok(series);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sd.as_f64()).map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
    Ok(series.map_values(|c| (c + T::lit(normal.sample(&mut rng))).max(T::zero())))
}
