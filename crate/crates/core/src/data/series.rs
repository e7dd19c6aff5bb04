use crate::model::{Compartment, ConcentrationState};
use crate::num::Real;

use super::DataError;

/// Arterial plasma concentration samples, interpolated piecewise linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaProfile<T> {
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> PlasmaProfile<T> {
    pub fn new(times: Vec<T>, values: Vec<T>) -> Result<Self, DataError> {
        if times.len() != values.len() {
            return Err(DataError::LengthMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(DataError::TooFewKnots(times.len()));
        }
        check_times(&times)?;
        if let Some(row) = values.iter().position(|v| !v.is_finite() || *v < T::zero()) {
            return Err(DataError::InvalidPlasma { row });
        }
        Ok(Self { times, values })
    }

    /// A profile that is `value` everywhere on `[t0, t1]`.
    pub fn constant(t0: T, t1: T, value: T) -> Result<Self, DataError> {
        Self::new(vec![t0, t1], vec![value, value])
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Piecewise-linear interpolation, clamped to the end values outside the
    /// sampled range. Exact at the knots.
    pub fn interp(&self, t: T) -> T {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        // Segment [times[i], times[i+1]) containing t.
        let i = self.times.partition_point(|&k| k <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }
}

/// Free-function form of [`PlasmaProfile::interp`].
pub fn linear_interp<T: Real>(profile: &PlasmaProfile<T>, t: T) -> T {
    profile.interp(t)
}

/// Concentration-time table for the four compartments, with an optional
/// arterial plasma column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationSeries<T> {
    times: Vec<T>,
    columns: [Vec<T>; 4],
    plasma: Option<Vec<T>>,
}

impl<T: Real> ConcentrationSeries<T> {
    pub fn new(times: Vec<T>, columns: [Vec<T>; 4], plasma: Option<Vec<T>>) -> Result<Self, DataError> {
        let n = times.len();
        for col in columns.iter().chain(plasma.iter()) {
            if col.len() != n {
                return Err(DataError::LengthMismatch {
                    expected: n,
                    found: col.len(),
                });
            }
        }
        check_times(&times)?;
        for (c, col) in Compartment::ALL.iter().zip(&columns) {
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    column: c.column().to_string(),
                    row,
                });
            }
        }
        if let Some(row) = plasma.as_ref().and_then(|p| p.iter().position(|v| !v.is_finite())) {
            return Err(DataError::NonFinite {
                column: "Cplasma".into(),
                row,
            });
        }
        Ok(Self { times, columns, plasma })
    }

    /// Builds a series from per-time states.
    pub fn from_states(times: Vec<T>, states: &[ConcentrationState<T>], plasma: Option<Vec<T>>) -> Result<Self, DataError> {
        let mut columns: [Vec<T>; 4] = Default::default();
        for s in states {
            for (col, v) in columns.iter_mut().zip(s.0) {
                col.push(v);
            }
        }
        Self::new(times, columns, plasma)
    }

    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            columns: Default::default(),
            plasma: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn column(&self, c: Compartment) -> &[T] {
        &self.columns[c.index()]
    }

    pub fn columns(&self) -> &[Vec<T>; 4] {
        &self.columns
    }

    pub fn plasma(&self) -> Option<&[T]> {
        self.plasma.as_deref()
    }

    pub fn state(&self, row: usize) -> ConcentrationState<T> {
        ConcentrationState(std::array::from_fn(|k| self.columns[k][row]))
    }

    /// Plasma column as an interpolable forcing profile.
    pub fn plasma_profile(&self) -> Result<PlasmaProfile<T>, DataError> {
        let values = self
            .plasma
            .clone()
            .ok_or_else(|| DataError::MissingColumn("Cplasma".into()))?;
        PlasmaProfile::new(self.times.clone(), values)
    }

    pub fn with_plasma(mut self, plasma: Option<Vec<T>>) -> Result<Self, DataError> {
        if let Some(p) = &plasma {
            if p.len() != self.len() {
                return Err(DataError::LengthMismatch {
                    expected: self.len(),
                    found: p.len(),
                });
            }
        }
        self.plasma = plasma;
        Ok(self)
    }

    /// Applies `f` to every compartment value (not to time or plasma).
    pub fn map_values(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            times: self.times.clone(),
            columns: self.columns.clone().map(|c| c.into_iter().map(&mut f).collect()),
            plasma: self.plasma.clone(),
        }
    }

    /// Rows `range` as a new series.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            times: self.times[range.clone()].to_vec(),
            columns: self.columns.clone().map(|c| c[range.clone()].to_vec()),
            plasma: self.plasma.as_ref().map(|p| p[range.clone()].to_vec()),
        }
    }
}

fn check_times<T: Real>(times: &[T]) -> Result<(), DataError> {
    if let Some(row) = times.iter().position(|t| !t.is_finite()) {
        return Err(DataError::NonFinite {
            column: "Time".into(),
            row,
        });
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(DataError::NonMonotonicTime { row: i + 1 });
    }
    Ok(())
}
