//! The three loss families, both as plain functions of a network and as
//! a differentiable composite recorded on a tape.

use ndarray::Array2;

use crate::data::{ConcentrationSeries, PlasmaProfile};
use crate::model::ModelVariant;
use crate::nn::{NetVars, Network, Tape, Var};
use crate::num::Real;

use super::{EstimationSpec, LossWeights, TrainError};

/// Everything about the fitting problem that stays fixed during training.
#[derive(Debug, Clone)]
pub struct PinnProblem<T> {
    /// Time normalization: the network sees `t / horizon`.
    pub horizon: T,
    pub data_times: Vec<T>,
    /// Observations, `(4, data_times.len())`.
    pub observed: Array2<T>,
    pub y0: [T; 4],
    /// Residual points: the data times followed by any extra points.
    pub collocation: Vec<T>,
    pub plasma: PlasmaProfile<T>,
    pub variant: ModelVariant,
    /// Network outputs are multiplied by these per-compartment factors.
    pub output_scale: Option<[T; 4]>,
}

impl<T: Real> PinnProblem<T> {
    /// Builds the problem from a dataset with a plasma column. The initial
    /// condition is the first row and the horizon is the last time.
    pub fn from_series(
        data: &ConcentrationSeries<T>,
        variant: ModelVariant,
        extra_collocation: usize,
        output_scale: bool,
    ) -> Result<Self, TrainError> {
        if data.len() < 2 {
            return Err(TrainError::InvalidConfig("dataset needs at least 2 rows".into()));
        }
        let plasma = data.plasma_profile()?;
        let times = data.times().to_vec();
        let horizon = *times.last().expect("non-empty");
        if !(horizon > T::zero()) {
            return Err(TrainError::InvalidConfig("dataset must extend past t = 0".into()));
        }
        let observed = Array2::from_shape_fn((4, times.len()), |(k, i)| data.columns()[k][i]);
        let y0 = data.state(0).0;
        let mut collocation = times.clone();
        let t0 = times[0];
        let span = horizon - t0;
        let k = T::from_usize(extra_collocation).unwrap();
        collocation.extend((0..extra_collocation).map(|i| t0 + span * (T::from_usize(i).unwrap() + T::lit(0.5)) / k));
        let output_scale = output_scale.then(|| {
            std::array::from_fn(|c| {
                let m = observed.row(c).iter().fold(T::zero(), |m, v| m.max(v.abs()));
                if m > T::zero() {
                    m
                } else {
                    T::one()
                }
            })
        });
        Ok(Self {
            horizon,
            data_times: times,
            observed,
            y0,
            collocation,
            plasma,
            variant,
            output_scale,
        })
    }

    pub fn n_data(&self) -> usize {
        self.data_times.len()
    }

    fn scale_output(&self, y: &mut [T]) {
        if let Some(s) = &self.output_scale {
            y.iter_mut().zip(s).for_each(|(v, &c)| *v *= c);
        }
    }

    /// Model output (scaled, physical time) at `t`.
    pub fn eval(&self, net: &Network<T>, t: T) -> Vec<T> {
        let mut y = net.forward(t / self.horizon);
        self.scale_output(&mut y);
        y
    }

    /// Model output and `dY/dt` in physical time.
    pub fn eval_with_derivative(&self, net: &Network<T>, t: T) -> (Vec<T>, Vec<T>) {
        let (mut y, mut dy) = net.forward_with_time_derivative(t / self.horizon);
        dy.iter_mut().for_each(|d| *d = *d / self.horizon);
        self.scale_output(&mut y);
        self.scale_output(&mut dy);
        (y, dy)
    }
}

/// Loss values; each family already includes its weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts<T> {
    pub data: T,
    pub ode: T,
    pub ic: T,
    pub total: T,
}

impl<T: Real> LossParts<T> {
    pub fn new(data: T, ode: T, ic: T) -> Self {
        Self {
            data,
            ode,
            ic,
            total: data + ode + ic,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.data.is_finite() && self.ode.is_finite() && self.ic.is_finite()
    }
}

/// `Σ_k w_k · mean_j r_kj²` for residual columns `r_j`.
pub fn weighted_mean_square<T: Real>(residuals: &[[T; 4]], weights: &[T; 4]) -> T {
    if residuals.is_empty() {
        return T::zero();
    }
    let n = T::from_usize(residuals.len()).unwrap();
    (0..4)
        .map(|k| weights[k] * (residuals.iter().map(|r| r[k] * r[k]).sum::<T>() / n))
        .sum()
}

/// Weighted data misfit over the dataset rows.
pub fn data_loss<T: Real>(net: &Network<T>, problem: &PinnProblem<T>, weights: &[T; 4]) -> T {
    let res: Vec<[T; 4]> = problem
        .data_times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let y = problem.eval(net, t);
            std::array::from_fn(|k| y[k] - problem.observed[[k, i]])
        })
        .collect();
    weighted_mean_square(&res, weights)
}

/// Weighted squared residual of `Y' = A·Y + gain·C_art·e₁` over the
/// collocation points, with the free parameters taken from `spec`.
pub fn ode_loss<T: Real>(net: &Network<T>, problem: &PinnProblem<T>, spec: &EstimationSpec<T>, weights: &[T; 4]) -> T {
    let (a, gain, _) = spec.linearization(problem.variant);
    let mut ys = Vec::with_capacity(problem.collocation.len());
    let mut dys = Vec::with_capacity(problem.collocation.len());
    let mut forcing = Vec::with_capacity(problem.collocation.len());
    for &t in &problem.collocation {
        let (y, dy) = problem.eval_with_derivative(net, t);
        ys.push([y[0], y[1], y[2], y[3]]);
        dys.push([dy[0], dy[1], dy[2], dy[3]]);
        forcing.push(problem.plasma.interp(t));
    }
    ode_residual_loss(&ys, &dys, &a, gain, &forcing, weights)
}

/// The residual loss for given states and derivatives.
pub fn ode_residual_loss<T: Real>(
    ys: &[[T; 4]],
    dys: &[[T; 4]],
    a: &Array2<T>,
    gain: T,
    forcing: &[T],
    weights: &[T; 4],
) -> T {
    let res: Vec<[T; 4]> = ys
        .iter()
        .zip(dys)
        .zip(forcing)
        .map(|((y, dy), &c)| {
            std::array::from_fn(|i| {
                let mut f = (0..4).map(|j| a[[i, j]] * y[j]).sum::<T>();
                if i == 0 {
                    f += gain * c;
                }
                dy[i] - f
            })
        })
        .collect();
    weighted_mean_square(&res, weights)
}

/// Weighted squared error of the network at the first data time.
pub fn ic_loss<T: Real>(net: &Network<T>, problem: &PinnProblem<T>, weights: &[T; 4]) -> T {
    let y = problem.eval(net, problem.data_times[0]);
    weighted_mean_square(&[std::array::from_fn(|k| y[k] - problem.y0[k])], weights)
}

/// All three families evaluated pointwise, without a tape.
pub fn evaluate_loss<T: Real>(
    net: &Network<T>,
    problem: &PinnProblem<T>,
    spec: &EstimationSpec<T>,
    weights: &LossWeights<T>,
) -> LossParts<T> {
    LossParts::new(
        data_loss(net, problem, &weights.data),
        ode_loss(net, problem, spec, &weights.ode),
        ic_loss(net, problem, &weights.ic),
    )
}

/// Handles to the loss nodes of a recorded composite.
pub struct LossGraph {
    pub net: NetVars,
    pub raw: Var,
    pub data: Var,
    pub ode: Var,
    pub ic: Var,
    pub total: Var,
}

/// Records the composite loss. Column 0 of the batch is the initial
/// condition, the first `n_data` columns are the data points, and all
/// columns are residual points.
pub fn record_loss<T: Real>(
    tape: &mut Tape<T>,
    net: &Network<T>,
    problem: &PinnProblem<T>,
    spec: &EstimationSpec<T>,
    weights: &LossWeights<T>,
) -> LossGraph {
    let vars = NetVars::record(tape, net);
    let raw = tape.leaf(Array2::from_shape_vec((spec.free.len(), 1), spec.raws()).expect("column"));

    let t_hat: Vec<T> = problem.collocation.iter().map(|&t| t / problem.horizon).collect();
    let (mut y, dy_hat) = vars.forward_with_time_derivative(tape, net.activation(), &t_hat);
    let mut dy = tape.scale(dy_hat, T::one() / problem.horizon);
    if let Some(s) = problem.output_scale {
        y = tape.scale_rows(y, s.to_vec());
        dy = tape.scale_rows(dy, s.to_vec());
    }

    let nd = problem.n_data();
    let y_data = tape.slice_cols(y, 0, nd);
    let obs = tape.constant(problem.observed.clone());
    let data_res = tape.sub(y_data, obs);
    let data = tape.weighted_mse(data_res, weights.data.to_vec());

    let y_ic = tape.slice_cols(y, 0, 1);
    let y0 = tape.constant(Array2::from_shape_vec((4, 1), problem.y0.to_vec()).expect("column"));
    let ic_res = tape.sub(y_ic, y0);
    let ic = tape.weighted_mse(ic_res, weights.ic.to_vec());

    let (a, gain, sens) = spec.linearization(problem.variant);
    let forcing = problem.collocation.iter().map(|&t| problem.plasma.interp(t)).collect();
    let f = tape.linear_system(raw, y, a, gain, forcing, sens);
    let ode_res = tape.sub(dy, f);
    let ode = tape.weighted_mse(ode_res, weights.ode.to_vec());

    let partial = tape.add(data, ode);
    let total = tape.add(partial, ic);
    LossGraph {
        net: vars,
        raw,
        data,
        ode,
        ic,
        total,
    }
}

/// Loss components and the gradient of the total with respect to the
/// network parameters (in [`Network::flatten`] order) followed by the raw
/// free parameters.
pub fn loss_and_gradient<T: Real>(
    net: &Network<T>,
    problem: &PinnProblem<T>,
    spec: &EstimationSpec<T>,
    weights: &LossWeights<T>,
) -> Result<(LossParts<T>, Vec<T>), TrainError> {
    let mut tape = Tape::new();
    let g = record_loss(&mut tape, net, problem, spec, weights);
    let parts = LossParts {
        data: tape.scalar(g.data),
        ode: tape.scalar(g.ode),
        ic: tape.scalar(g.ic),
        total: tape.scalar(g.total),
    };
    let grads = tape.gradient(g.total)?;
    let mut flat = Vec::with_capacity(net.num_params() + spec.free.len());
    g.net.flat_gradient(&grads, &mut flat);
    grads.extend_into(g.raw, &mut flat);
    Ok((parts, flat))
}
