use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{write_text, ConcentrationSeries, DataError, LossRecord, ParamRecord, RunArtifacts};
use crate::model::{ModelVariant, ParamName};
use crate::nn::{init_network, Network, NetworkConfig};
use crate::num::Real;

use super::adam::{adam_step, AdamState};
use super::lbfgs::{lbfgs_refine, LbfgsConfig};
use super::loss::{loss_and_gradient, LossParts, PinnProblem};
use super::{EstimationSpec, TrainError};

/// Per-compartment weights of the three loss families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights<T> {
    pub ic: [T; 4],
    pub ode: [T; 4],
    pub data: [T; 4],
}

impl<T: Real> Default for LossWeights<T> {
    fn default() -> Self {
        Self::uniform(T::one(), T::lit(2.0), T::lit(3.0))
    }
}

impl<T: Real> LossWeights<T> {
    pub fn uniform(ic: T, ode: T, data: T) -> Self {
        Self {
            ic: [ic; 4],
            ode: [ode; 4],
            data: [data; 4],
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let all = self.ic.iter().chain(&self.ode).chain(&self.data);
        if all.clone().any(|w| !(w.is_finite() && *w >= T::zero())) {
            return Err(TrainError::InvalidConfig("loss weights must be finite and non-negative".into()));
        }
        if all.clone().all(|w| *w == T::zero()) {
            return Err(TrainError::InvalidConfig("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub lr: T,
    /// Adam iterations.
    pub iterations: usize,
    /// L-BFGS refinement steps after Adam.
    pub lbfgs_iters: usize,
    /// Evenly spaced residual points added to the data times.
    pub extra_collocation: usize,
    pub weights: LossWeights<T>,
    pub log_every: usize,
    /// Scale network outputs by each column's maximum.
    pub output_scale: bool,
    pub variant: ModelVariant,
    /// Abort when the total loss exceeds this.
    pub divergence_limit: T,
    /// Points in the dense prediction grid.
    pub prediction_points: usize,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            lr: T::lit(1e-4),
            iterations: 10_000,
            lbfgs_iters: 500,
            extra_collocation: 0,
            weights: LossWeights::default(),
            log_every: 100,
            output_scale: false,
            variant: ModelVariant::Literal,
            divergence_limit: T::lit(1e8),
            prediction_points: 481,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    /// Adam-only setup used to compare architectures: η = 1e-2 with
    /// per-compartment output scaling, logging only the endpoints.
    pub fn architecture_sweep(iterations: usize) -> Self {
        Self {
            lr: T::lit(1e-2),
            iterations,
            lbfgs_iters: 0,
            output_scale: true,
            log_every: iterations.max(1),
            prediction_points: 2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.lr > T::zero() && self.lr.is_finite()) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        if self.log_every == 0 {
            return Err(TrainError::InvalidConfig("log stride must be at least 1".into()));
        }
        if self.prediction_points < 2 {
            return Err(TrainError::InvalidConfig("prediction grid needs at least 2 points".into()));
        }
        self.weights.validate()
    }
}

/// Outcome of a training run. When `abort` is set, everything else holds
/// the state reached before the failure.
#[derive(Debug)]
pub struct TrainRun<T> {
    pub network: Network<T>,
    pub spec: EstimationSpec<T>,
    pub artifacts: RunArtifacts<T>,
    pub iterations: usize,
    pub lbfgs_line_search_failed: bool,
    pub abort: Option<TrainError>,
}

pub fn train<T: Real>(
    dataset: &ConcentrationSeries<T>,
    spec: &EstimationSpec<T>,
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig<T>,
) -> Result<TrainRun<T>, TrainError> {
    train_with_progress(dataset, spec, net_cfg, cfg, |_| {})
}

/// [`train`], calling `progress` with every logged record.
pub fn train_with_progress<T: Real>(
    dataset: &ConcentrationSeries<T>,
    spec: &EstimationSpec<T>,
    net_cfg: &NetworkConfig,
    cfg: &TrainConfig<T>,
    mut progress: impl FnMut(&LossRecord<T>),
) -> Result<TrainRun<T>, TrainError> {
    cfg.validate()?;
    let problem = PinnProblem::from_series(dataset, cfg.variant, cfg.extra_collocation, cfg.output_scale)?;
    let mut net = init_network::<T>(net_cfg)?;
    if net.input_dim() != 1 || net.output_dim() != 4 {
        return Err(TrainError::InvalidConfig("network must map time to the four compartments".into()));
    }
    let mut spec = spec.clone();
    let n_net = net.num_params();
    let names = spec.names().iter().map(|n| n.to_string()).collect();
    let mut artifacts = RunArtifacts::new(names);
    let clock = Instant::now();

    let mut x = net.flatten();
    x.extend(spec.raws());
    let load = |x: &[T], net: &mut Network<T>, spec: &mut EstimationSpec<T>| {
        net.unflatten(&x[..n_net]);
        spec.set_raws(&x[n_net..]);
    };
    let mut log = |artifacts: &mut RunArtifacts<T>, iter: usize, parts: &LossParts<T>, values: Vec<T>| {
        let rec = LossRecord {
            iter,
            data: parts.data,
            ode: parts.ode,
            ic: parts.ic,
            total: parts.total,
        };
        progress(&rec);
        artifacts.losses.push(rec);
        artifacts.params.push(ParamRecord { iter, values });
    };

    let mut adam = AdamState::new(x.len());
    let mut abort = None;
    let mut last_iter = 0;
    for iter in 0..=cfg.iterations {
        load(&x, &mut net, &mut spec);
        let (parts, grad) = match loss_and_gradient(&net, &problem, &spec, &cfg.weights) {
            Ok(v) => v,
            Err(e) => {
                abort = Some(TrainError::NonFiniteGradient {
                    iter,
                    detail: e.to_string(),
                });
                break;
            }
        };
        if !parts.is_finite() || parts.total > cfg.divergence_limit {
            abort = Some(TrainError::Diverged {
                iter,
                loss: parts.total.as_f64(),
            });
            break;
        }
        last_iter = iter;
        if iter % cfg.log_every == 0 || iter == cfg.iterations {
            log(&mut artifacts, iter, &parts, spec.values());
        }
        if iter == cfg.iterations {
            break;
        }
        if let Err(TrainError::NonFiniteGradient { detail, .. }) = adam_step(&mut adam, &mut x, &grad, cfg.lr) {
            abort = Some(TrainError::NonFiniteGradient { iter, detail });
            break;
        }
    }

    let mut line_search_failed = false;
    if abort.is_none() && cfg.lbfgs_iters > 0 {
        let mut scratch_net = net.clone();
        let mut scratch_spec = spec.clone();
        let objective = |p: &[T]| {
            load(p, &mut scratch_net, &mut scratch_spec);
            match loss_and_gradient(&scratch_net, &problem, &scratch_spec, &cfg.weights) {
                Ok((parts, g)) if parts.is_finite() => (parts.total, g),
                _ => (T::infinity(), vec![T::zero(); p.len()]),
            }
        };
        let lcfg = LbfgsConfig {
            max_iters: cfg.lbfgs_iters,
            ..LbfgsConfig::default()
        };
        let mut pending: Option<(usize, Vec<T>)> = None;
        let mut log_net = net.clone();
        let mut log_spec = spec.clone();
        let mut log_at = |k: usize, p: &[T]| {
            load(p, &mut log_net, &mut log_spec);
            if let Ok((parts, _)) = loss_and_gradient(&log_net, &problem, &log_spec, &cfg.weights) {
                log(&mut artifacts, cfg.iterations + k, &parts, log_spec.values());
            }
        };
        let result = lbfgs_refine(objective, &x, &lcfg, |k, p, _| {
            if k % cfg.log_every == 0 {
                log_at(k, p);
                pending = None;
            } else {
                pending = Some((k, p.to_vec()));
            }
        });
        if let Some((k, p)) = pending {
            log_at(k, &p);
        }
        line_search_failed = result.line_search_failed;
        last_iter = cfg.iterations + result.iterations;
        x = result.x;
        load(&x, &mut net, &mut spec);
    }

    artifacts.prediction = Some(predict(&net, &problem, cfg.prediction_points)?);
    artifacts.seconds = clock.elapsed().as_secs_f64();
    Ok(TrainRun {
        network: net,
        spec,
        artifacts,
        iterations: last_iter,
        lbfgs_line_search_failed: line_search_failed,
        abort,
    })
}

/// Network prediction on an even grid spanning the data.
fn predict<T: Real>(net: &Network<T>, problem: &PinnProblem<T>, points: usize) -> Result<ConcentrationSeries<T>, DataError> {
    let t0 = problem.data_times[0];
    let span = problem.horizon - t0;
    let last = T::from_usize(points - 1).unwrap();
    let times: Vec<T> = (0..points).map(|i| t0 + span * T::from_usize(i).unwrap() / last).collect();
    let mut cols: [Vec<T>; 4] = Default::default();
    for &t in &times {
        let y = problem.eval(net, t);
        for k in 0..4 {
            cols[k].push(y[k]);
        }
    }
    let plasma = times.iter().map(|&t| problem.plasma.interp(t)).collect();
    ConcentrationSeries::new(times, cols, Some(plasma))
}

/// Raw values, bounds and iteration count saved next to a network
/// checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iteration: usize,
    pub variant: ModelVariant,
    pub params: Vec<CheckpointParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointParam {
    pub name: ParamName,
    pub min: f64,
    pub max: f64,
    pub raw: f64,
    pub value: f64,
}

impl Checkpoint {
    pub fn from_spec<T: Real>(spec: &EstimationSpec<T>, iteration: usize, variant: ModelVariant) -> Self {
        Self {
            iteration,
            variant,
            params: spec
                .free
                .iter()
                .map(|p| CheckpointParam {
                    name: p.name,
                    min: p.min.as_f64(),
                    max: p.max.as_f64(),
                    raw: p.raw.as_f64(),
                    value: p.value().as_f64(),
                })
                .collect(),
        }
    }

    /// Restores raw values into a spec with the same free parameters.
    pub fn apply<T: Real>(&self, spec: &mut EstimationSpec<T>) -> Result<(), TrainError> {
        if spec.names() != self.params.iter().map(|p| p.name).collect::<Vec<_>>() {
            return Err(TrainError::InvalidConfig("checkpoint does not match the free parameters".into()));
        }
        for (b, c) in spec.free.iter_mut().zip(&self.params) {
            b.min = T::lit(c.min);
            b.max = T::lit(c.max);
            b.raw = T::lit(c.raw);
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        Ok(write_text(path.as_ref(), &(text + "\n"))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| TrainError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}
