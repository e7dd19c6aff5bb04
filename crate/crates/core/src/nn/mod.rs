//! Fully connected networks, their input derivative, and reverse-mode
//! gradients.

mod activation;
mod network;
mod tape;

use std::path::PathBuf;

use ndarray::{Array2, Axis};
use thiserror::Error;

use crate::num::Real;

pub use activation::{sigmoid, Activation};
pub use network::{init_network, Initializer, Layer, Network, NetworkConfig};
pub use tape::{Gradients, LinearSensitivity, Tape, Var};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient at node {node} ({op})")]
    NonFiniteGradient { node: usize, op: &'static str },
    #[error("network checkpoint line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl NetError {
    fn parse(line: usize, msg: impl Into<String>) -> Self {
        NetError::Parse { line, msg: msg.into() }
    }
}

/// Tape leaves for every weight matrix and bias column of a network.
pub struct NetVars {
    pub weights: Vec<Var>,
    pub biases: Vec<Var>,
}

impl NetVars {
    /// Registers the network's parameters as leaves.
    pub fn record<T: Real>(tape: &mut Tape<T>, net: &Network<T>) -> Self {
        let mut weights = Vec::with_capacity(net.layers.len());
        let mut biases = Vec::with_capacity(net.layers.len());
        for l in &net.layers {
            weights.push(tape.leaf(l.weight.clone()));
            biases.push(tape.leaf(l.bias.clone().insert_axis(Axis(1))));
        }
        Self { weights, biases }
    }

    /// Gradient in the same order as [`Network::flatten`].
    pub fn flat_gradient<T: Real>(&self, grads: &Gradients<T>, out: &mut Vec<T>) {
        for (&w, &b) in self.weights.iter().zip(&self.biases) {
            grads.extend_into(w, out);
            grads.extend_into(b, out);
        }
    }

    /// Batched forward pass with input tangent: returns `(Y, dY/dt_hat)`,
    /// each `(outputs, samples)`.
    pub fn forward_with_time_derivative<T: Real>(&self, tape: &mut Tape<T>, act: Activation, t_hat: &[T]) -> (Var, Var) {
        let n = t_hat.len();
        let x = tape.constant(Array2::from_shape_vec((1, n), t_hat.to_vec()).expect("row vector"));
        let ones = tape.constant(Array2::ones((1, n)));
        let (mut a, mut da) = (x, ones);
        let last = self.weights.len() - 1;
        for k in 0..=last {
            let z = tape.matmul(self.weights[k], a);
            let z = tape.add_bias(z, self.biases[k]);
            let dz = tape.matmul(self.weights[k], da);
            if k == last {
                return (z, dz);
            }
            a = tape.activate(z, act);
            let slope = tape.activate_deriv(z, act);
            da = tape.mul(slope, dz);
        }
        unreachable!("network has at least one layer")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batched_pass_matches_pointwise() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Relu, Activation::SIN] {
            let cfg = NetworkConfig {
                hidden_layers: 2,
                neurons: 6,
                activation: act,
                seed: 3,
                ..NetworkConfig::default()
            };
            let net = init_network::<f64>(&cfg).unwrap();
            let ts = [0.0, 0.25, 0.9];
            let mut tape = Tape::new();
            let vars = NetVars::record(&mut tape, &net);
            let (y, dy) = vars.forward_with_time_derivative(&mut tape, act, &ts);
            for (j, &t) in ts.iter().enumerate() {
                let (py, pdy) = net.forward_with_time_derivative(t);
                for k in 0..4 {
                    assert!((tape.value(y)[[k, j]] - py[k]).abs() < 1e-14);
                    assert!((tape.value(dy)[[k, j]] - pdy[k]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn zero_network_has_zero_gradient_of_squared_output() {
        let mut net = init_network::<f64>(&NetworkConfig {
            hidden_layers: 2,
            neurons: 5,
            ..NetworkConfig::default()
        })
        .unwrap();
        let zeros = vec![0.0; net.num_params()];
        net.unflatten(&zeros);
        let mut tape = Tape::new();
        let vars = NetVars::record(&mut tape, &net);
        let (y, _) = vars.forward_with_time_derivative(&mut tape, Activation::Tanh, &[0.4]);
        let y0 = tape.slice_cols(y, 0, 1);
        let loss = tape.weighted_mse(y0, vec![1.0, 0.0, 0.0, 0.0]);
        let g = tape.gradient(loss).unwrap();
        let mut flat = Vec::new();
        vars.flat_gradient(&g, &mut flat);
        assert_eq!(flat.len(), net.num_params());
        assert!(flat.iter().all(|&x| x == 0.0));
    }
}
