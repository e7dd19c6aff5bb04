use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use pbpk_core::data::fmt_num;
use pbpk_core::model::{ModelParams, ModelVariant};
use pbpk_core::nn::{Activation, NetworkConfig};
use pbpk_core::ode::{synthesize_dataset, PlasmaSpec};
use pbpk_core::train::{train, TrainConfig};
use rayon::prelude::*;

use crate::common::{build_spec, create_out_dir, default_free, load_dataset, load_manifest, parse_free, parse_list};
use crate::OutDir;

#[derive(Args)]
pub struct SweepArgs {
    /// Dataset CSV; the default synthetic dataset when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "relu,tanh,sigmoid,sin")]
    activations: String,
    #[arg(long, default_value = "1,2,6")]
    layers: String,
    #[arg(long, default_value = "9,18,27,50")]
    neurons: String,
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    /// Shortcut for 1000 iterations.
    #[arg(long, conflicts_with = "iters")]
    fast: bool,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    /// Train on raw concentrations instead of per-compartment scaled outputs.
    #[arg(long)]
    no_output_scale: bool,
    #[arg(long, default_value_t = default_free())]
    free: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells trained concurrently.
    #[arg(long, env = "PBPK_IPINN_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    out: OutDir,
}

struct Cell {
    layers: usize,
    activation: Activation,
    neurons: usize,
}

pub fn run(a: SweepArgs) -> Result<()> {
    let activations: Vec<Activation> = parse_list(&a.activations, "activation")?;
    let layers: Vec<usize> = parse_list(&a.layers, "layer count")?;
    let neurons: Vec<usize> = parse_list(&a.neurons, "neuron count")?;
    if layers.contains(&0) || neurons.contains(&0) {
        bail!("layer and neuron counts must be positive");
    }
    if a.jobs == 0 {
        bail!("--jobs must be positive");
    }
    let iters = if a.fast { 1000 } else { a.iters };
    let cfg = TrainConfig {
        lr: a.lr,
        output_scale: !a.no_output_scale,
        ..TrainConfig::architecture_sweep(iters)
    };
    cfg.validate()?;
    let free = parse_free(&a.free)?;
    let (data, manifest) = match &a.data {
        Some(path) => (load_dataset(path)?, load_manifest(path, None)?),
        None => (
            synthesize_dataset(&ModelParams::default(), &PlasmaSpec::default(), ModelVariant::Literal, 200, 48.0, 0.0, 0)?,
            None,
        ),
    };
    let spec = build_spec(manifest.as_ref(), &free, (0.5, 2.0))?;
    for &act in &activations {
        act.validate()?;
    }
    create_out_dir(&a.out.out)?;

    let mut cells = Vec::new();
    for &l in &layers {
        for &act in &activations {
            for &n in &neurons {
                cells.push(Cell { layers: l, activation: act, neurons: n });
            }
        }
    }
    let run_cell = |c: &Cell| -> String {
        let net = NetworkConfig {
            hidden_layers: c.layers,
            neurons: c.neurons,
            activation: c.activation,
            seed: a.seed,
            ..NetworkConfig::default()
        };
        let clock = Instant::now();
        let outcome = train(&data, &spec, &net, &cfg);
        let secs = clock.elapsed().as_secs_f64();
        let text = match outcome {
            Ok(run) if run.abort.is_none() => match run.artifacts.last_loss() {
                Some(r) if r.total.is_finite() => format!("{} ({secs:.2})", fmt_num(r.total)),
                _ => "diverged".to_string(),
            },
            _ => "diverged".to_string(),
        };
        eprintln!("L={} {} N={}: {text}", c.layers, c.activation, c.neurons);
        text
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let results: Vec<String> = pool.install(|| cells.par_iter().map(run_cell).collect());

    let mut csv = String::from("layers,activation");
    for n in &neurons {
        let _ = write!(csv, ",{n}");
    }
    csv.push('\n');
    for (row, chunk) in results.chunks(neurons.len()).enumerate() {
        let c = &cells[row * neurons.len()];
        let _ = write!(csv, "{},{}", c.layers, c.activation);
        for cell in chunk {
            let _ = write!(csv, ",{cell}");
        }
        csv.push('\n');
    }
    let path = a.out.out.join("sweep.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} cells to {}", results.len(), path.display());
    Ok(())
}
