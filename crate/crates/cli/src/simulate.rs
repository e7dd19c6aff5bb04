use anyhow::{bail, Result};
use clap::Args;
use pbpk_core::data::{write_series, Manifest};
use pbpk_core::model::{ModelParams, ModelVariant};
use pbpk_core::ode::{add_noise, solve, InitialState, PlasmaSpec, SolveConfig, SolveMethod};

use crate::common::{create_out_dir, MANIFEST_FILE};
use crate::OutDir;

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Simulated span in hours.
    #[arg(long, default_value_t = 48.0)]
    horizon: f64,
    /// Standard deviation of additive Gaussian noise (mg/L).
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = ModelVariant::Literal)]
    variant: ModelVariant,
    #[arg(long, default_value_t = SolveMethod::ExpmOracle)]
    solver: SolveMethod,
    /// Plasma absorption rate (1/h).
    #[arg(long, default_value_t = 1.0)]
    ka: f64,
    /// Plasma elimination rate (1/h).
    #[arg(long, default_value_t = 0.1)]
    ke: f64,
    /// Plasma peak concentration (mg/L).
    #[arg(long, default_value_t = 0.06)]
    peak: f64,
    #[command(flatten)]
    out: OutDir,
}

pub fn run(a: SimulateArgs) -> Result<()> {
    if a.points < 2 {
        bail!("--points must be at least 2, got {}", a.points);
    }
    if !(a.horizon > 0.0 && a.horizon.is_finite()) {
        bail!("--horizon must be positive");
    }
    if !(a.noise_sd >= 0.0 && a.noise_sd.is_finite()) {
        bail!("--noise-sd must be non-negative");
    }
    let plasma = PlasmaSpec { ka: a.ka, ke: a.ke, peak: a.peak };
    let grid = SolveConfig::uniform_grid(a.points, a.horizon);
    let profile = plasma.sample(&grid)?;
    let reference = ModelParams::<f64>::default();
    create_out_dir(&a.out.out)?;

    let clean = solve(&reference, &profile, a.variant, &InitialState::zero(), &SolveConfig::new(a.solver, grid))?;
    let data = add_noise(clean, a.noise_sd, a.seed)?;
    write_series(&data, a.out.out.join("data.csv"))?;
    Manifest {
        points: a.points,
        horizon: a.horizon,
        noise_sd: a.noise_sd,
        seed: a.seed,
        variant: a.variant,
        solver: a.solver,
        plasma,
        reference,
    }
    .save(a.out.out.join(MANIFEST_FILE))?;
    println!("wrote {} rows to {}", data.len(), a.out.out.join("data.csv").display());
    Ok(())
}
