use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pbpk_core::data::{read_series, Manifest};
use pbpk_core::model::{ModelParams, ParamName};
use pbpk_core::train::EstimationSpec;
use pbpk_core::ConcentrationSeries64;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn load_dataset(path: &Path) -> Result<ConcentrationSeries64> {
    let series = read_series(path).with_context(|| format!("reading {}", path.display()))?;
    if series.len() < 2 {
        bail!("{} holds {} rows, need at least 2", path.display(), series.len());
    }
    Ok(series)
}

/// The explicit manifest, or `manifest.json` next to the data file.
pub fn load_manifest(data: &Path, explicit: Option<&Path>) -> Result<Option<Manifest>> {
    let path: PathBuf = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let sibling = data.with_file_name(MANIFEST_FILE);
            if !sibling.exists() {
                return Ok(None);
            }
            sibling
        }
    };
    let m = Manifest::load(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(m))
}

pub fn parse_free(list: &str) -> Result<Vec<ParamName>> {
    let names = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<ParamName>().map_err(|e| anyhow::anyhow!("{e}")))
        .collect::<Result<Vec<_>>>()?;
    if names.is_empty() {
        bail!("--free lists no parameters to estimate");
    }
    Ok(names)
}

pub fn default_free() -> String {
    ParamName::DEFAULT_FREE.map(|n| n.as_str()).join(",")
}

pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts.as_slice() else {
        bail!("expected two comma-separated numbers, got `{s}`");
    };
    Ok((a.parse().context("bad lower scale")?, b.parse().context("bad upper scale")?))
}

pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} `{x}`: {e}")))
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() {
        bail!("empty {what} list");
    }
    Ok(items)
}

/// Bounds scaled around the manifest reference, or the built-in defaults
/// when no manifest is available.
pub fn build_spec(manifest: Option<&Manifest>, free: &[ParamName], scales: (f64, f64)) -> Result<EstimationSpec<f64>> {
    let reference = manifest.map(|m| m.reference).unwrap_or_else(ModelParams::default);
    Ok(EstimationSpec::from_reference(&reference, free, scales.0, scales.1)?)
}

pub fn reference_values(manifest: Option<&Manifest>, free: &[ParamName]) -> Option<Vec<f64>> {
    manifest.map(|m| free.iter().map(|&n| m.reference.get(n)).collect())
}
