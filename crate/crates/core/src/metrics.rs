//! Exposure summaries: AUC, Cmax/Tmax and terminal half-life.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::data::{fmt_num, write_text, ConcentrationSeries, DataError};
use crate::model::Compartment;
use crate::num::Real;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("tail fraction must lie in (0, 1], got {0}")]
    InvalidTailFraction(f64),
    #[error(transparent)]
    Data(#[from] DataError),
}

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

/// Linear trapezoid rule over `(times, values)`.
pub fn auc_values<T: Real>(times: &[T], values: &[T]) -> Result<T, MetricsError> {
    if times.len() < 2 {
        return Err(MetricsError::TooFewPoints { needed: 2, got: times.len() });
    }
    let half = T::lit(0.5);
    Ok(times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) * half)
        .sum())
}

pub fn auc_trapezoid<T: Real>(series: &ConcentrationSeries<T>, c: Compartment) -> Result<T, MetricsError> {
    auc_values(series.times(), series.column(c))
}

/// Peak value and the earliest time it is reached.
pub fn cmax_tmax_values<T: Real>(times: &[T], values: &[T]) -> Result<(T, T), MetricsError> {
    if times.is_empty() {
        return Err(MetricsError::TooFewPoints { needed: 1, got: 0 });
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Ok((values[best], times[best]))
}

pub fn cmax_tmax<T: Real>(series: &ConcentrationSeries<T>, c: Compartment) -> Result<(T, T), MetricsError> {
    cmax_tmax_values(series.times(), series.column(c))
}

/// Terminal half-life from a log-linear least-squares fit on the last
/// `⌈tail_fraction·N⌉` points. Non-positive values in the tail are skipped.
///
/// Returns `None` when fewer than three points remain or the fitted slope is
/// not negative.
pub fn half_life_values<T: Real>(times: &[T], values: &[T], tail_fraction: f64) -> Result<Option<T>, MetricsError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(MetricsError::InvalidTailFraction(tail_fraction));
    }
    let n = times.len();
    let take = ((tail_fraction * n as f64).ceil() as usize).min(n);
    let pts: Vec<(f64, f64)> = times[n - take..]
        .iter()
        .zip(&values[n - take..])
        .filter(|(_, &v)| v > T::zero())
        .map(|(&t, &v)| (t.as_f64(), v.as_f64().ln()))
        .collect();
    if pts.len() < 3 {
        return Ok(None);
    }
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tbar) * (y - ybar)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tbar) * (t - tbar)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) || !slope.is_finite() {
        return Ok(None);
    }
    Ok(Some(T::lit(std::f64::consts::LN_2 / -slope)))
}

pub fn half_life<T: Real>(
    series: &ConcentrationSeries<T>,
    c: Compartment,
    tail_fraction: f64,
) -> Result<Option<T>, MetricsError> {
    half_life_values(series.times(), series.column(c), tail_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkSummary {
    pub compartment: Compartment,
    pub auc: f64,
    pub cmax: f64,
    pub tmax: f64,
    pub half_life: Option<f64>,
}

pub const PK_HEADER: &str = "compartment,auc,cmax,tmax,half_life";

/// One summary per compartment.
pub fn summarize<T: Real>(series: &ConcentrationSeries<T>, tail_fraction: f64) -> Result<Vec<PkSummary>, MetricsError> {
    Compartment::ALL
        .into_iter()
        .map(|c| {
            let (cmax, tmax) = cmax_tmax(series, c)?;
            Ok(PkSummary {
                compartment: c,
                auc: auc_trapezoid(series, c)?.as_f64(),
                cmax: cmax.as_f64(),
                tmax: tmax.as_f64(),
                half_life: half_life(series, c, tail_fraction)?.map(|h| h.as_f64()),
            })
        })
        .collect()
}

/// CSV with one row per compartment; an undeterminable half-life is an empty
/// cell.
pub fn format_summary(rows: &[PkSummary]) -> String {
    let mut s = format!("{PK_HEADER}\n");
    for r in rows {
        let hl = r.half_life.map(fmt_num).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{hl}", r.compartment, fmt_num(r.auc), fmt_num(r.cmax), fmt_num(r.tmax));
    }
    s
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[PkSummary]) -> Result<(), DataError> {
    write_text(path.as_ref(), &format_summary(rows))
}

pub fn parse_summary(text: &str) -> Result<Vec<PkSummary>, DataError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |i: usize, col: &str| -> Result<f64, DataError> {
            rec.get(i).unwrap_or("").trim().parse().map_err(|_| DataError::NonNumericCell {
                column: col.into(),
                row: row + 1,
            })
        };
        let compartment = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|_| DataError::NonNumericCell { column: "compartment".into(), row: row + 1 })?;
        let hl = rec.get(4).unwrap_or("").trim();
        out.push(PkSummary {
            compartment,
            auc: num(1, "auc")?,
            cmax: num(2, "cmax")?,
            tmax: num(3, "tmax")?,
            half_life: if hl.is_empty() { None } else { Some(num(4, "half_life")?) },
        });
    }
    Ok(out)
}
