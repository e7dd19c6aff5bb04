//! Scalar abstractions.
//!
//! [`Real`] is the floating-point bound used by every numeric routine in the
//! crate (`f32` and `f64`). [`Field`] is the much weaker bound needed by the
//! model assembly code, which is also evaluated over dual numbers to obtain
//! parameter sensitivities.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, One, ToPrimitive, Zero};

/// Floating point scalar usable throughout the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of)
    /// any finite `f64`, so this never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real is convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Closed arithmetic without ordering or transcendental functions.
pub trait Field:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
}

impl<S> Field for S where
    S: Copy
        + Zero
        + One
        + Add<Output = S>
        + Sub<Output = S>
        + Mul<Output = S>
        + Div<Output = S>
        + Neg<Output = S>
{
}
