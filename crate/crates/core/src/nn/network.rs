use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::num::{Field, Real};

use super::{Activation, NetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initializer {
    GlorotUniform,
    #[default]
    GlorotNormal,
}

impl std::fmt::Display for Initializer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Initializer::GlorotUniform => "glorot-uniform",
            Initializer::GlorotNormal => "glorot-normal",
        })
    }
}

impl FromStr for Initializer {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "glorot-uniform" => Ok(Initializer::GlorotUniform),
            "glorot-normal" => Ok(Initializer::GlorotNormal),
            other => Err(NetError::InvalidConfig(format!("unknown initializer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub neurons: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub initializer: Initializer,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden_layers: 6,
            neurons: 50,
            output_dim: 4,
            activation: Activation::Tanh,
            initializer: Initializer::GlorotNormal,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.hidden_layers == 0 || self.neurons == 0 {
            return Err(NetError::InvalidConfig("need at least one hidden layer with one neuron".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NetError::InvalidConfig("input and output dimensions must be positive".into()));
        }
        self.activation.validate()
    }

    /// `(fan_out, fan_in)` of every affine map, input to output.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.neurons, self.hidden_layers));
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// One affine map `x ↦ W·x + b`, with `W` stored as `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

/// Fully connected network; every layer except the last is followed by the
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub config: NetworkConfig,
    pub layers: Vec<Layer<T>>,
}

/// Draws Glorot-initialized weights and zero biases.
pub fn init_network<T: Real>(cfg: &NetworkConfig) -> Result<Network<T>, NetError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layers = cfg
        .shapes()
        .into_iter()
        .map(|(out, inp)| {
            let fan = (out + inp) as f64;
            let weight = match cfg.initializer {
                Initializer::GlorotUniform => {
                    let limit = (6.0 / fan).sqrt();
                    let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
                    Array2::from_shape_simple_fn((out, inp), || T::lit(dist.sample(&mut rng)))
                }
                Initializer::GlorotNormal => {
                    let dist = Normal::new(0.0, (2.0 / fan).sqrt()).expect("positive sd");
                    Array2::from_shape_simple_fn((out, inp), || T::lit(dist.sample(&mut rng)))
                }
            };
            Layer {
                weight,
                bias: Array1::zeros(out),
            }
        })
        .collect();
    Ok(Network { config: *cfg, layers })
}

impl<T: Real> Network<T> {
    pub fn activation(&self) -> Activation {
        self.config.activation
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.config.output_dim
    }

    /// Number of trainable scalars.
    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Network output at scalar input `t_hat`.
    pub fn forward(&self, t_hat: T) -> Vec<T> {
        let act = self.activation();
        self.propagate(t_hat, |w| w, |z| act.value(z))
    }

    /// Output and its derivative with respect to the input, from one
    /// dual-number pass. The value part is bit-identical to [`forward`].
    ///
    /// [`forward`]: Network::forward
    pub fn forward_with_time_derivative(&self, t_hat: T) -> (Vec<T>, Vec<T>) {
        let act = self.activation();
        let out = self.propagate(Dual::variable(t_hat), Dual::constant, |z| {
            z.chain(act.value(z.re), act.deriv(z.re))
        });
        out.into_iter().map(|d| (d.re, d.eps)).unzip()
    }

    /// Evaluates at every input; rows are outputs, columns inputs.
    pub fn predict(&self, t_hat: &[T]) -> Array2<T> {
        let mut out = Array2::zeros((self.output_dim(), t_hat.len()));
        for (j, &t) in t_hat.iter().enumerate() {
            for (i, y) in self.forward(t).into_iter().enumerate() {
                out[[i, j]] = y;
            }
        }
        out
    }

    /// Shared forward pass over any scalar type with identical operation
    /// order, so value and dual evaluations agree exactly.
    fn propagate<S: Field>(&self, x: S, lift: impl Fn(T) -> S, act: impl Fn(S) -> S) -> Vec<S> {
        let mut a = vec![x; self.input_dim()];
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z: Vec<S> = layer
                .weight
                .rows()
                .into_iter()
                .zip(&layer.bias)
                .map(|(row, &b)| {
                    let mut acc = lift(b);
                    for (&w, &ai) in row.iter().zip(&a) {
                        acc = acc + lift(w) * ai;
                    }
                    acc
                })
                .collect();
            if k != last {
                z.iter_mut().for_each(|v| *v = act(*v));
            }
            a = z;
        }
        a
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Copies all weights then biases, layer by layer, into one vector.
    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            v.extend(l.weight.iter().copied());
            v.extend(l.bias.iter().copied());
        }
        v
    }

    /// Inverse of [`flatten`](Network::flatten); returns the unused tail.
    pub fn unflatten<'a>(&mut self, mut v: &'a [T]) -> &'a [T] {
        for l in &mut self.layers {
            for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *w = v[0];
                v = &v[1..];
            }
        }
        v
    }

    /// Textual checkpoint.
    ///
    /// ```text
    /// pbpk-network v1
    /// activation tanh
    /// initializer glorot-normal
    /// seed 42
    /// layers 3
    /// layer <out> <in>
    /// <out*in weights, row-major, space separated>
    /// <out biases>
    /// ...
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "activation {}", self.config.activation);
        let _ = writeln!(s, "initializer {}", self.config.initializer);
        let _ = writeln!(s, "seed {}", self.config.seed);
        let _ = writeln!(s, "layers {}", self.layers.len());
        for l in &self.layers {
            let (out, inp) = l.weight.dim();
            let _ = writeln!(s, "layer {out} {inp}");
            let join = |xs: &mut dyn Iterator<Item = &T>| xs.map(|x| format!("{:.16e}", x.as_f64())).collect::<Vec<_>>().join(" ");
            let _ = writeln!(s, "{}", join(&mut l.weight.iter()));
            let _ = writeln!(s, "{}", join(&mut l.bias.iter()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, NetError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| lines.next().ok_or_else(|| NetError::parse(0, format!("unexpected end of file, expected {what}")));

        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(NetError::parse(n, format!("expected `{MAGIC}`")));
        }
        let activation: Activation = keyed(next("activation")?, "activation")?;
        let initializer: Initializer = keyed(next("initializer")?, "initializer")?;
        let seed: u64 = keyed(next("seed")?, "seed")?;
        let count: usize = keyed(next("layers")?, "layers")?;
        if count < 2 {
            return Err(NetError::parse(0, "need at least two layers"));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("layer shape")?;
            let dims: Vec<usize> = line
                .strip_prefix("layer ")
                .ok_or_else(|| NetError::parse(n, "expected `layer <out> <in>`"))?
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| NetError::parse(n, "bad layer shape")))
                .collect::<Result<_, _>>()?;
            let [out, inp] = dims[..] else {
                return Err(NetError::parse(n, "expected two layer dimensions"));
            };
            let w = numbers::<T>(next("weights")?, out * inp)?;
            let b = numbers::<T>(next("biases")?, out)?;
            layers.push(Layer {
                weight: Array2::from_shape_vec((out, inp), w).expect("length checked"),
                bias: Array1::from(b),
            });
        }
        for pair in layers.windows(2) {
            if pair[0].weight.nrows() != pair[1].weight.ncols() {
                return Err(NetError::parse(0, "layer shapes do not chain"));
            }
        }
        let config = NetworkConfig {
            input_dim: layers[0].weight.ncols(),
            hidden_layers: count - 1,
            neurons: layers[0].weight.nrows(),
            output_dim: layers[count - 1].weight.nrows(),
            activation,
            initializer,
            seed,
        };
        Ok(Network { config, layers })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NetError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| NetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

const MAGIC: &str = "pbpk-network v1";

fn keyed<V: FromStr>((n, line): (usize, &str), key: &str) -> Result<V, NetError> {
    line.strip_prefix(key)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| NetError::parse(n, format!("expected `{key} <value>`")))
}

fn numbers<T: Real>((n, line): (usize, &str), expected: usize) -> Result<Vec<T>, NetError> {
    let v: Vec<T> = line
        .split_whitespace()
        .map(|x| x.parse::<f64>().map(T::lit).map_err(|_| NetError::parse(n, format!("bad number `{x}`"))))
        .collect::<Result<_, _>>()?;
    if v.len() != expected {
        return Err(NetError::parse(n, format!("expected {expected} values, found {}", v.len())));
    }
    Ok(v)
}
