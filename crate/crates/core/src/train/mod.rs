//! Inverse PINN training: bounded physical parameters learned jointly with
//! a network surrogate of the concentrations.

mod adam;
mod bounded;
mod lbfgs;
mod loss;
mod trainer;

use thiserror::Error;

use crate::data::DataError;
use crate::nn::NetError;

pub use adam::{adam_step, AdamState};
pub use bounded::{constrain, BoundedParam, EstimationSpec};
pub use lbfgs::{lbfgs_refine, LbfgsConfig, LbfgsResult};
pub use loss::{
    data_loss, evaluate_loss, ic_loss, loss_and_gradient, ode_loss, ode_residual_loss, record_loss, weighted_mean_square,
    LossGraph, LossParts, PinnProblem,
};
pub use trainer::{train, train_with_progress, Checkpoint, CheckpointParam, LossWeights, TrainConfig, TrainRun};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training setup: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient at iteration {iter}: {detail}")]
    NonFiniteGradient { iter: usize, detail: String },
    #[error("loss diverged at iteration {iter} (total {loss:e})")]
    Diverged { iter: usize, loss: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Data(#[from] DataError),
}
