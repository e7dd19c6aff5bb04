//! Training run logs: loss history and parameter trajectory CSVs.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::num::Real;

use super::{fmt_num, ConcentrationSeries, DataError};

pub const LOSS_HEADER: &str = "iter,loss_data,loss_ode,loss_ic,loss_total";

/// Loss components at one logged iteration. Each component already carries
/// its per-compartment weights, so `total = data + ode + ic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord<T> {
    pub iter: usize,
    pub data: T,
    pub ode: T,
    pub ic: T,
    pub total: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRecord<T> {
    pub iter: usize,
    pub values: Vec<T>,
}

/// Everything a training run produces besides the network itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts<T> {
    pub losses: Vec<LossRecord<T>>,
    pub param_names: Vec<String>,
    pub params: Vec<ParamRecord<T>>,
    pub prediction: Option<ConcentrationSeries<T>>,
    pub seconds: f64,
}

impl<T: Real> RunArtifacts<T> {
    pub fn new(param_names: Vec<String>) -> Self {
        Self {
            losses: Vec::new(),
            param_names,
            params: Vec::new(),
            prediction: None,
            seconds: 0.0,
        }
    }

    pub fn last_loss(&self) -> Option<&LossRecord<T>> {
        self.losses.last()
    }

    /// Lowest logged total loss among iterations `<= iter`.
    pub fn best_total_until(&self, iter: usize) -> Option<T> {
        self.losses
            .iter()
            .filter(|r| r.iter <= iter)
            .map(|r| r.total)
            .fold(None, |best, t| Some(best.map_or(t, |b: T| b.min(t))))
    }

    pub fn format_losses(&self) -> String {
        let mut out = format!("{LOSS_HEADER}\n");
        for r in &self.losses {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.iter,
                fmt_num(r.data),
                fmt_num(r.ode),
                fmt_num(r.ic),
                fmt_num(r.total)
            ));
        }
        out
    }

    pub fn format_params(&self) -> String {
        let mut out = String::from("iter");
        for n in &self.param_names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.params {
            out.push_str(&r.iter.to_string());
            for v in &r.values {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_loss_history(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        write_text(path.as_ref(), &self.format_losses())
    }

    pub fn write_param_trajectory(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        write_text(path.as_ref(), &self.format_params())
    }
}

pub fn parse_loss_history<T: Real, R: Read>(reader: R) -> Result<Vec<LossRecord<T>>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = LOSS_HEADER.split(',').collect();
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(DataError::MissingColumn((*name).into()));
        }
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, DataError> {
            rec.get(i).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| DataError::NonNumericCell {
                column: expected[i].into(),
                row,
            })
        };
        let iter = rec.get(0).and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| DataError::NonNumericCell {
            column: "iter".into(),
            row,
        })?;
        out.push(LossRecord {
            iter,
            data: T::lit(num(1)?),
            ode: T::lit(num(2)?),
            ic: T::lit(num(3)?),
            total: T::lit(num(4)?),
        });
    }
    Ok(out)
}

/// Returns the parameter names and the per-iteration rows.
pub fn parse_param_trajectory<T: Real, R: Read>(reader: R) -> Result<(Vec<String>, Vec<ParamRecord<T>>), DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("iter") {
        return Err(DataError::MissingColumn("iter".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |column: &str| DataError::NonNumericCell {
            column: column.into(),
            row,
        };
        let iter = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("iter"))?;
        let values = names
            .iter()
            .enumerate()
            .map(|(i, n)| rec.get(i + 1).and_then(|s| s.parse::<f64>().ok()).map(T::lit).ok_or_else(|| bad(n)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(ParamRecord { iter, values });
    }
    Ok((names, rows))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    let mut f = File::create(path).map_err(|e| DataError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| DataError::io(path, e))
}
