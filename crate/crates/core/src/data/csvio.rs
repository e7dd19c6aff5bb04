//! Concentration-time CSV files.
//!
//! Header `Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma` (plasma optional). Columns are
//! matched by name, case-insensitively, so their order in the file is free.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::model::Compartment;
use crate::num::Real;

use super::{fmt_num, ConcentrationSeries, DataError};

const TIME: &str = "Time";
const PLASMA: &str = "Cplasma";

pub fn read_series<T: Real>(path: impl AsRef<Path>) -> Result<ConcentrationSeries<T>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    parse_series(file)
}

/// Parses the CSV schema from any reader.
pub fn parse_series<T: Real, R: Read>(reader: R) -> Result<ConcentrationSeries<T>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));

    let time_idx = find(TIME).ok_or_else(|| DataError::MissingColumn(TIME.into()))?;
    let mut comp_idx = [0usize; 4];
    for (slot, c) in comp_idx.iter_mut().zip(Compartment::ALL) {
        *slot = find(c.column()).ok_or_else(|| DataError::MissingColumn(c.column().into()))?;
    }
    let plasma_idx = find(PLASMA);

    let mut times = Vec::new();
    let mut columns: [Vec<T>; 4] = Default::default();
    let mut plasma = plasma_idx.map(|_| Vec::new());

    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |idx: usize, column: &str| -> Result<T, DataError> {
            record
                .get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .map(T::lit)
                .ok_or_else(|| DataError::NonNumericCell {
                    column: column.to_string(),
                    row,
                })
        };
        times.push(cell(time_idx, TIME)?);
        for ((col, &idx), c) in columns.iter_mut().zip(&comp_idx).zip(Compartment::ALL) {
            col.push(cell(idx, c.column())?);
        }
        if let (Some(p), Some(idx)) = (plasma.as_mut(), plasma_idx) {
            p.push(cell(idx, PLASMA)?);
        }
    }
    ConcentrationSeries::new(times, columns, plasma)
}

pub fn write_series<T: Real>(series: &ConcentrationSeries<T>, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| DataError::io(path, e))?;
    file.write_all(format_series(series).as_bytes())
        .map_err(|e| DataError::io(path, e))
}

/// Renders the CSV text for a series, 17 significant digits per value.
pub fn format_series<T: Real>(series: &ConcentrationSeries<T>) -> String {
    let mut out = String::from("Time,Cbb,Cbm,Cccsf,Cscsf");
    if series.plasma().is_some() {
        out.push_str(",Cplasma");
    }
    out.push('\n');
    for i in 0..series.len() {
        out.push_str(&fmt_num(series.times()[i]));
        for c in Compartment::ALL {
            out.push(',');
            out.push_str(&fmt_num(series.column(c)[i]));
        }
        if let Some(p) = series.plasma() {
            out.push(',');
            out.push_str(&fmt_num(p[i]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_all_six_columns() {
        let text = "Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma\n0,0,0,0,0,0\n1,0.1,0.01,0.02,0.003,0.05\n2,0.2,0.02,0.03,0.004,0.04\n";
        let s: ConcentrationSeries<f64> = parse_series(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.plasma().unwrap(), &[0.0, 0.05, 0.04]);
        assert_eq!(s.column(Compartment::CranialCsf)[2], 0.03);
    }

    #[test]
    fn header_match_is_case_insensitive_and_order_free() {
        let text = "cscsf,TIME,cbb,CBM,cccsf\n4,0,1,2,3\n";
        let s: ConcentrationSeries<f64> = parse_series(text.as_bytes()).unwrap();
        assert_eq!(s.state(0).0, [1.0, 2.0, 3.0, 4.0]);
        assert!(s.plasma().is_none());
    }

    #[test]
    fn missing_column_is_named() {
        let text = "Time,Cbb,Cccsf,Cscsf\n0,0,0,0\n";
        let err = parse_series::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(ref c) if c == "Cbm"), "{err}");
    }

    #[test]
    fn duplicate_time_is_reported_by_row() {
        let text = "Time,Cbb,Cbm,Cccsf,Cscsf\n0,0,0,0,0\n1,0,0,0,0\n1,0,0,0,0\n";
        let err = parse_series::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::NonMonotonicTime { row: 2 }), "{err}");
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let text = "Time,Cbb,Cbm,Cccsf,Cscsf\n0,0,abc,0,0\n";
        let err = parse_series::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(
            matches!(err, DataError::NonNumericCell { ref column, row: 0 } if column == "Cbm"),
            "{err}"
        );
    }

    #[test]
    fn empty_series_writes_header_only() {
        let s = ConcentrationSeries::<f64>::empty();
        assert_eq!(format_series(&s), "Time,Cbb,Cbm,Cccsf,Cscsf\n");
        let back: ConcentrationSeries<f64> = parse_series(format_series(&s).as_bytes()).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn header_includes_plasma_when_present() {
        let s = ConcentrationSeries::new(vec![0.0], [vec![1.0], vec![2.0], vec![3.0], vec![4.0]], Some(vec![5.0])).unwrap();
        let text = format_series(&s);
        assert!(text.starts_with("Time,Cbb,Cbm,Cccsf,Cscsf,Cplasma\n"));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 48.0 / 199.0).collect();
        let cols = std::array::from_fn(|k| times.iter().map(|t| (-(k as f64 + 1.0) * t / 10.0).exp() / 3.0).collect());
        let s = ConcentrationSeries::new(times.clone(), cols, Some(times.iter().map(|t| t.sin().abs()).collect())).unwrap();
        write_series(&s, &path).unwrap();
        assert_eq!(read_series::<f64>(&path).unwrap(), s);
    }

    #[test]
    fn unreadable_path_reports_io() {
        let err = read_series::<f64>("/nonexistent/dir/x.csv").unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }

    proptest! {
        #[test]
        fn read_write_is_identity(
            rows in proptest::collection::vec((0.001f64..10.0, proptest::array::uniform4(-1e3f64..1e3), proptest::option::of(0.0f64..1.0)), 0..40),
            with_plasma in any::<bool>(),
        ) {
            let mut t = 0.0;
            let mut times = Vec::new();
            let mut cols: [Vec<f64>; 4] = Default::default();
            let mut plasma = Vec::new();
            for (dt, vals, p) in &rows {
                t += dt;
                times.push(t);
                for k in 0..4 { cols[k].push(vals[k]); }
                plasma.push(p.unwrap_or(0.25));
            }
            let s = ConcentrationSeries::new(times, cols, with_plasma.then_some(plasma)).unwrap();
            let back: ConcentrationSeries<f64> = parse_series(format_series(&s).as_bytes()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
