use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use pbpk_core::data::{emit_plot, fmt_num, read_series};
use pbpk_core::de::EstimationResult;
use pbpk_core::metrics::{summarize, write_summary, DEFAULT_TAIL_FRACTION};
use pbpk_core::model::{Compartment, ParamName};
use pbpk_core::ConcentrationSeries64;

use crate::common::{create_out_dir, load_dataset};
use crate::OutDir;

#[derive(Args)]
pub struct MetricsArgs {
    /// Concentration series CSV.
    #[arg(long)]
    data: PathBuf,
    /// Share of the final points used for the half-life fit.
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    tail_fraction: f64,
    #[command(flatten)]
    out: OutDir,
}

pub fn run_metrics(a: MetricsArgs) -> Result<()> {
    if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
        bail!("--tail-fraction must lie in (0, 1]");
    }
    let data = load_dataset(&a.data)?;
    create_out_dir(&a.out.out)?;
    let rows = summarize(&data, a.tail_fraction)?;
    write_summary(a.out.out.join("pk_summary.csv"), &rows)?;
    for r in &rows {
        let hl = r.half_life.map_or("n/a".to_string(), |h| format!("{h:.4} h"));
        println!(
            "{:>6}: AUC {:.6e} mg·h/L, Cmax {:.6e} mg/L at {:.3} h, half-life {hl}",
            r.compartment, r.auc, r.cmax, r.tmax
        );
    }
    Ok(())
}

#[derive(Args)]
pub struct CompareArgs {
    /// Two or more result.csv files.
    #[arg(required = true, num_args = 2..)]
    results: Vec<PathBuf>,
    /// Observed data to overlay on the plots.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    out: OutDir,
}

pub fn run_compare(a: CompareArgs) -> Result<()> {
    if a.results.len() < 2 {
        bail!("compare needs at least two results");
    }
    let results = a
        .results
        .iter()
        .map(|p| EstimationResult::read_csv(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let observed = a.data.as_deref().map(load_dataset).transpose()?;
    create_out_dir(&a.out.out)?;

    let labels = unique_labels(&results);
    let path = a.out.out.join("comparison.csv");
    std::fs::write(&path, comparison_table(&results, &labels)).with_context(|| format!("writing {}", path.display()))?;

    let mut curves: Vec<(String, ConcentrationSeries64)> = Vec::new();
    if let Some(obs) = observed {
        curves.push(("data".into(), obs));
    }
    for (label, file) in labels.iter().zip(&a.results) {
        let pred = file.with_file_name("prediction.csv");
        if pred.exists() {
            let s = read_series(&pred).with_context(|| format!("reading {}", pred.display()))?;
            curves.push((label.clone(), s));
        }
    }
    if !curves.is_empty() {
        let refs: Vec<(&str, &ConcentrationSeries64)> = curves.iter().map(|(l, s)| (l.as_str(), s)).collect();
        for c in Compartment::ALL {
            emit_plot(&refs, c, a.out.out.join(format!("compare_{c}.svg")))?;
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn unique_labels(results: &[EstimationResult]) -> Vec<String> {
    results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let dup = results.iter().filter(|o| o.method == r.method).count() > 1;
            if dup {
                format!("{}_{}", r.method, i + 1)
            } else {
                r.method.clone()
            }
        })
        .collect()
}

/// One row per parameter: reference, then value and absolute error for each
/// method. Cells a method cannot fill are left empty.
fn comparison_table(results: &[EstimationResult], labels: &[String]) -> String {
    let mut names: Vec<ParamName> = Vec::new();
    for r in results {
        for n in &r.names {
            if !names.contains(n) {
                names.push(*n);
            }
        }
    }
    let mut s = String::from("parameter,reference");
    for l in labels {
        let _ = write!(s, ",{l},{l}_abs_err");
    }
    s.push('\n');
    for n in names {
        let reference = results.iter().find_map(|r| {
            let i = r.names.iter().position(|m| *m == n)?;
            r.reference.as_ref().map(|v| v[i])
        });
        let _ = write!(s, "{n},{}", reference.map(fmt_num).unwrap_or_default());
        for r in results {
            match r.names.iter().position(|m| *m == n) {
                Some(i) => {
                    let err = r.abs_errors().map(|e| fmt_num(e[i])).unwrap_or_default();
                    let _ = write!(s, ",{},{err}", fmt_num(r.values[i]));
                }
                None => s.push_str(",,"),
            }
        }
        s.push('\n');
    }
    s
}
