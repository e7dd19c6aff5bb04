//! Brain pharmacokinetic model with forward solvers, a physics-informed
//! neural network for inverse parameter estimation, a differential evolution
//! baseline and exposure metrics.
//!
//! Numeric code is generic over [`num::Real`]; the aliases below fix the
//! scalar to `f64` or `f32`.

pub mod data;
pub mod de;
pub mod dual;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod num;
pub mod ode;
pub mod train;

pub type ModelParams64 = model::ModelParams<f64>;
pub type SystemParams64 = model::SystemParams<f64>;
pub type DrugParams64 = model::DrugParams<f64>;
pub type ConcentrationSeries64 = data::ConcentrationSeries<f64>;
pub type PlasmaProfile64 = data::PlasmaProfile<f64>;
pub type Network64 = nn::Network<f64>;
pub type EstimationSpec64 = train::EstimationSpec<f64>;
pub type TrainConfig64 = train::TrainConfig<f64>;

pub type ModelParams32 = model::ModelParams<f32>;
pub type SystemParams32 = model::SystemParams<f32>;
pub type DrugParams32 = model::DrugParams<f32>;
pub type ConcentrationSeries32 = data::ConcentrationSeries<f32>;
pub type PlasmaProfile32 = data::PlasmaProfile<f32>;
pub type Network32 = nn::Network<f32>;
pub type EstimationSpec32 = train::EstimationSpec<f32>;
pub type TrainConfig32 = train::TrainConfig<f32>;
