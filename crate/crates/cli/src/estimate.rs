use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use pbpk_core::data::{fmt_num, write_series, Manifest};
use pbpk_core::de::{fit_de, DeConfig, EstimationResult};
use pbpk_core::model::{ConcentrationState, ModelVariant, ParamName};
use pbpk_core::nn::{Activation, Initializer, NetworkConfig};
use pbpk_core::ode::{solve, InitialState, SolveConfig};
use pbpk_core::train::{train_with_progress, Checkpoint, EstimationSpec, LossWeights, TrainConfig, TrainRun};
use pbpk_core::ConcentrationSeries64;

use crate::common::{build_spec, create_out_dir, default_free, load_dataset, load_manifest, parse_free, parse_pair, reference_values};
use crate::OutDir;

/// Flags shared by both estimators.
#[derive(Args)]
pub struct ProblemArgs {
    /// Dataset CSV (time, Cbb, Cbm, Cccsf, Cscsf, plasma).
    #[arg(long)]
    data: PathBuf,
    /// Reference manifest; defaults to manifest.json next to the data.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Comma-separated parameters to estimate.
    #[arg(long, default_value_t = default_free())]
    free: String,
    /// Lower and upper multipliers of the reference value.
    #[arg(long, default_value = "0.5,2.0")]
    bounds_scale: String,
    #[arg(long, default_value_t = ModelVariant::Literal)]
    variant: ModelVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Problem {
    data: ConcentrationSeries64,
    manifest: Option<Manifest>,
    free: Vec<ParamName>,
    spec: EstimationSpec<f64>,
}

impl ProblemArgs {
    fn load(&self) -> Result<Problem> {
        let free = parse_free(&self.free)?;
        let scales = parse_pair(&self.bounds_scale)?;
        let data = load_dataset(&self.data)?;
        let manifest = load_manifest(&self.data, self.manifest.as_deref())?;
        let spec = build_spec(manifest.as_ref(), &free, scales)?;
        Ok(Problem { data, manifest, free, spec })
    }
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 6)]
    layers: usize,
    #[arg(long, default_value_t = 50)]
    neurons: usize,
    /// tanh, sigmoid, relu, sin or sin:<omega>.
    #[arg(long, default_value_t = Activation::Tanh)]
    activation: Activation,
    #[arg(long = "init", default_value_t = Initializer::GlorotNormal)]
    initializer: Initializer,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    /// Adam iterations.
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 500)]
    lbfgs_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    weights_ic: f64,
    #[arg(long, default_value_t = 2.0)]
    weights_ode: f64,
    #[arg(long, default_value_t = 3.0)]
    weights_data: f64,
    /// Uniform collocation points added to the data times.
    #[arg(long, default_value_t = 0)]
    extra_collocation: usize,
    /// Divide each compartment by its column maximum before fitting.
    #[arg(long)]
    output_scale: bool,
    #[arg(long, default_value_t = 100)]
    log_every: usize,
    #[command(flatten)]
    out: OutDir,
}

pub fn run_train(a: TrainArgs) -> Result<()> {
    let p = a.problem.load()?;
    let net_cfg = NetworkConfig {
        hidden_layers: a.layers,
        neurons: a.neurons,
        activation: a.activation,
        initializer: a.initializer,
        seed: a.problem.seed,
        ..NetworkConfig::default()
    };
    net_cfg.validate()?;
    let cfg = TrainConfig {
        lr: a.lr,
        iterations: a.iters,
        lbfgs_iters: a.lbfgs_iters,
        extra_collocation: a.extra_collocation,
        weights: LossWeights::uniform(a.weights_ic, a.weights_ode, a.weights_data),
        log_every: a.log_every,
        output_scale: a.output_scale,
        variant: a.problem.variant,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let out = &a.out.out;
    create_out_dir(out)?;

    let run = train_with_progress(&p.data, &p.spec, &net_cfg, &cfg, |r| {
        eprintln!(
            "iter {:>8}  total {:.6e}  data {:.6e}  ode {:.6e}  ic {:.6e}",
            r.iter, r.total, r.data, r.ode, r.ic
        );
    })?;
    write_train_outputs(out, &run, &p, cfg.variant)?;
    match run.abort {
        Some(e) => Err(anyhow::Error::new(e).context("training stopped early; partial results were written")),
        None => Ok(()),
    }
}

fn write_train_outputs(out: &Path, run: &TrainRun<f64>, p: &Problem, variant: ModelVariant) -> Result<()> {
    run.artifacts.write_loss_history(out.join("loss_history.csv"))?;
    run.artifacts.write_param_trajectory(out.join("param_trajectory.csv"))?;
    if let Some(pred) = &run.artifacts.prediction {
        write_series(pred, out.join("prediction.csv"))?;
    }
    run.network.save(out.join("network.txt"))?;
    Checkpoint::from_spec(&run.spec, run.iterations, variant).save(out.join("checkpoint.json"))?;
    let result = EstimationResult {
        method: "PINN".into(),
        names: p.free.clone(),
        values: run.spec.values(),
        reference: reference_values(p.manifest.as_ref(), &p.free),
        objective: run.artifacts.last_loss().map_or(f64::NAN, |r| r.total),
        seconds: run.artifacts.seconds,
    };
    result.write_csv(out.join("result.csv"))?;
    print_result(&result);
    Ok(())
}

#[derive(Args)]
pub struct FitDeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Population size; ten per free parameter when omitted.
    #[arg(long)]
    pop_size: Option<usize>,
    /// Mutation factor.
    #[arg(long, default_value_t = 0.8)]
    f: f64,
    /// Crossover rate.
    #[arg(long, default_value_t = 0.9)]
    cr: f64,
    #[arg(long, default_value_t = 500)]
    generations: usize,
    /// Relative tolerance of the forward solver.
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-13)]
    atol: f64,
    /// Worker threads for objective evaluation.
    #[arg(long, env = "PBPK_IPINN_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    out: OutDir,
}

pub fn run_fit_de(a: FitDeArgs) -> Result<()> {
    let p = a.problem.load()?;
    let cfg = DeConfig {
        pop_size: a.pop_size,
        f: a.f,
        cr: a.cr,
        max_generations: a.generations,
        seed: a.problem.seed,
        jobs: a.jobs,
        ..DeConfig::default()
    };
    cfg.validate(p.free.len())?;
    let solver = SolveConfig::dopri45(a.rtol, a.atol, p.data.times().to_vec());
    solver.validate()?;
    let out = &a.out.out;
    create_out_dir(out)?;

    let (mut result, de) = fit_de(&p.data, &p.spec, a.problem.variant, &cfg, &solver)?;
    result.reference = reference_values(p.manifest.as_ref(), &p.free);
    result.write_csv(out.join("result.csv"))?;

    let mut hist = String::from("generation,best\n");
    for (g, v) in de.history.iter().enumerate() {
        let _ = writeln!(hist, "{g},{}", fmt_num(*v));
    }
    std::fs::write(out.join("de_history.csv"), hist).context("writing de_history.csv")?;

    let plasma = p.data.plasma_profile()?;
    let y0 = ConcentrationState(p.data.state(0).0.map(|c| c.max(0.0)));
    let init = InitialState { y0, t0: p.data.times()[0] };
    let pred = solve(&p.spec.params_with(&de.best), &plasma, a.problem.variant, &init, &solver)?;
    write_series(&pred, out.join("prediction.csv"))?;
    print_result(&result);
    Ok(())
}

fn print_result(r: &EstimationResult) {
    let errs = r.abs_errors();
    for (i, (n, v)) in r.names.iter().zip(&r.values).enumerate() {
        match &errs {
            Some(e) => println!("{n:>9} = {v:.10e}  abs err {:.3e}", e[i]),
            None => println!("{n:>9} = {v:.10e}"),
        }
    }
    println!("objective {:.6e}  ({:.1} s)", r.objective, r.seconds);
}
