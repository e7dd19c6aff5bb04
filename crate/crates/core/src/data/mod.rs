//! Data files: concentration series, plasma forcing, run logs and plots.

mod artifacts;
mod csvio;
mod manifest;
mod plot;
mod series;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::num::Real;

pub use artifacts::{parse_loss_history, parse_param_trajectory, LossRecord, ParamRecord, RunArtifacts, LOSS_HEADER};
pub use csvio::{format_series, parse_series, read_series, write_series};
pub use manifest::Manifest;
pub use plot::{emit_plot, render_plot};
pub use series::{linear_interp, ConcentrationSeries, PlasmaProfile};

pub(crate) use artifacts::write_text;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("time column is not strictly increasing at row {row}")]
    NonMonotonicTime { row: usize },
    #[error("non-numeric value in column `{column}`, row {row}")]
    NonNumericCell { column: String, row: usize },
    #[error("non-finite value in column `{column}`, row {row}")]
    NonFinite { column: String, row: usize },
    #[error("column length {found} does not match time length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("plasma profile needs at least 2 samples, got {0}")]
    TooFewKnots(usize),
    #[error("plasma concentration at row {row} is negative or non-finite")]
    InvalidPlasma { row: usize },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("nothing to plot")]
    EmptyPlot,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}
