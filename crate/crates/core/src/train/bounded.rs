use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::model::{assemble_matrix, forcing_gain, ModelParams, ModelVariant, ParamKind, ParamName};
use crate::nn::{sigmoid, LinearSensitivity};
use crate::num::Real;

use super::TrainError;

/// A physical parameter learned through an unconstrained raw value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedParam<T> {
    pub name: ParamName,
    pub min: T,
    pub max: T,
    pub raw: T,
}

impl<T: Real> BoundedParam<T> {
    /// Starts at the midpoint of the bounds (`raw = 0`).
    pub fn new(name: ParamName, min: T, max: T) -> Result<Self, TrainError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(TrainError::InvalidConfig(format!(
                "bounds for {name} must satisfy min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self {
            name,
            min,
            max,
            raw: T::zero(),
        })
    }

    pub fn value(&self) -> T {
        constrain(self)
    }

    /// `d value / d raw`.
    pub fn slope(&self) -> T {
        let s = sigmoid(self.raw);
        (self.max - self.min) * s * (T::one() - s)
    }

    pub fn contains(&self, v: T) -> bool {
        v > self.min && v < self.max
    }

    /// Sets `raw` so that the constrained value is `v` (which must lie
    /// strictly inside the bounds).
    pub fn set_value(&mut self, v: T) {
        let u = (v - self.min) / (self.max - self.min);
        self.raw = (u / (T::one() - u)).ln();
    }
}

/// `min + (max − min)·sigmoid(raw)`.
pub fn constrain<T: Real>(p: &BoundedParam<T>) -> T {
    p.min + (p.max - p.min) * sigmoid(p.raw)
}

/// Free parameters with their bounds plus fixed values for everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationSpec<T> {
    pub free: Vec<BoundedParam<T>>,
    pub base: ModelParams<T>,
}

impl<T: Real> EstimationSpec<T> {
    pub fn new(free: Vec<BoundedParam<T>>, base: ModelParams<T>) -> Result<Self, TrainError> {
        if free.is_empty() {
            return Err(TrainError::InvalidConfig("no free parameters to estimate".into()));
        }
        for (i, p) in free.iter().enumerate() {
            if free[..i].iter().any(|q| q.name == p.name) {
                return Err(TrainError::InvalidConfig(format!("parameter {} listed twice", p.name)));
            }
        }
        Ok(Self { free, base })
    }

    /// Bounds `[lo·ref, hi·ref]` around the values in `reference`; unbound
    /// and unionized fractions are capped at 1.
    pub fn from_reference(reference: &ModelParams<T>, names: &[ParamName], lo: T, hi: T) -> Result<Self, TrainError> {
        if !(lo > T::zero() && lo < hi) {
            return Err(TrainError::InvalidConfig(format!("bound scales must satisfy 0 < lo < hi, got {lo}, {hi}")));
        }
        let free = names
            .iter()
            .map(|&name| {
                let v = reference.get(name);
                let mut max = v * hi;
                if name.kind() == ParamKind::Fraction {
                    max = max.min(T::one());
                }
                BoundedParam::new(name, v * lo, max)
            })
            .collect::<Result<_, _>>()?;
        Self::new(free, *reference)
    }

    pub fn names(&self) -> Vec<ParamName> {
        self.free.iter().map(|p| p.name).collect()
    }

    pub fn raws(&self) -> Vec<T> {
        self.free.iter().map(|p| p.raw).collect()
    }

    pub fn set_raws(&mut self, raws: &[T]) {
        for (p, &r) in self.free.iter_mut().zip(raws) {
            p.raw = r;
        }
    }

    pub fn values(&self) -> Vec<T> {
        self.free.iter().map(constrain).collect()
    }

    /// Fixed parameters with the current free values substituted.
    pub fn params(&self) -> ModelParams<T> {
        let mut p = self.base;
        for b in &self.free {
            p.set(b.name, b.value());
        }
        p
    }

    /// Parameters with the given constrained free values substituted.
    pub fn params_with(&self, values: &[T]) -> ModelParams<T> {
        let mut p = self.base;
        for (b, &v) in self.free.iter().zip(values) {
            p.set(b.name, v);
        }
        p
    }

    /// `A(θ)`, the forcing gain, and their derivatives with respect to each
    /// raw value.
    pub fn linearization(&self, variant: ModelVariant) -> (Array2<T>, T, Vec<LinearSensitivity<T>>) {
        let params = self.params();
        let matrix = assemble_matrix(&params, variant);
        let gain = forcing_gain(&params);
        let sens = (0..self.free.len())
            .map(|j| {
                let mut dp = params.map(Dual::constant);
                let b = &self.free[j];
                dp.set(b.name, Dual::new(b.value(), b.slope()));
                let dm = assemble_matrix(&dp, variant);
                LinearSensitivity {
                    d_matrix: Array2::from_shape_fn((4, 4), |(r, c)| dm.0[r][c].eps),
                    d_gain: forcing_gain(&dp).eps,
                }
            })
            .collect();
        (Array2::from_shape_fn((4, 4), |(r, c)| matrix.0[r][c]), gain, sens)
    }
}
