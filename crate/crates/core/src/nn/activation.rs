use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::num::Real;

use super::NetError;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
    /// `sin(ω·x)`
    Sin { omega: f64 },
}

impl Activation {
    pub const SIN: Activation = Activation::Sin { omega: 1.0 };

    #[inline]
    pub fn value<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(T::zero()),
            Activation::Sin { omega } => (T::lit(omega) * x).sin(),
        }
    }

    /// First derivative. ReLU uses 0 at the kink.
    #[inline]
    pub fn deriv<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (T::one() - s)
            }
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sin { omega } => {
                let w = T::lit(omega);
                w * (w * x).cos()
            }
        }
    }

    #[inline]
    pub fn second_deriv<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                -T::lit(2.0) * t * (T::one() - t * t)
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (T::one() - s) * (T::one() - T::lit(2.0) * s)
            }
            Activation::Relu => T::zero(),
            Activation::Sin { omega } => {
                let w = T::lit(omega);
                -w * w * (w * x).sin()
            }
        }
    }

    pub fn validate(self) -> Result<(), NetError> {
        match self {
            Activation::Sin { omega } if !(omega > 0.0 && omega.is_finite()) => {
                Err(NetError::InvalidConfig(format!("sin frequency must be positive, got {omega}")))
            }
            _ => Ok(()),
        }
    }
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Tanh => f.write_str("tanh"),
            Activation::Sigmoid => f.write_str("sigmoid"),
            Activation::Relu => f.write_str("relu"),
            Activation::Sin { omega } if *omega == 1.0 => f.write_str("sin"),
            Activation::Sin { omega } => write!(f, "sin:{omega}"),
        }
    }
}

impl FromStr for Activation {
    type Err = NetError;

    /// Accepts `tanh`, `sigmoid`, `relu`, `sin` and `sin:<omega>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let act = match lower.as_str() {
            "tanh" => Activation::Tanh,
            "sigmoid" => Activation::Sigmoid,
            "relu" => Activation::Relu,
            "sin" => Activation::SIN,
            other => match other.strip_prefix("sin:") {
                Some(w) => Activation::Sin {
                    omega: w
                        .parse()
                        .map_err(|_| NetError::InvalidConfig(format!("bad sin frequency `{w}`")))?,
                },
                None => return Err(NetError::InvalidConfig(format!("unknown activation `{s}`"))),
            },
        };
        act.validate()?;
        Ok(act)
    }
}
