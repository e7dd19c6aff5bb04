use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::data::{fmt_num, write_text, DataError};
use crate::model::ParamName;

/// Recovered parameter values from one estimation method.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub method: String,
    pub names: Vec<ParamName>,
    pub values: Vec<f64>,
    /// Known true values, when the data were synthesized.
    pub reference: Option<Vec<f64>>,
    pub objective: f64,
    pub seconds: f64,
}

impl EstimationResult {
    pub fn abs_errors(&self) -> Option<Vec<f64>> {
        self.reference
            .as_ref()
            .map(|r| self.values.iter().zip(r).map(|(v, t)| (v - t).abs()).collect())
    }

    /// Header: `method,<names>,abs_err_<names>,objective,seconds`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method");
        for n in &self.names {
            let _ = write!(s, ",{n}");
        }
        for n in &self.names {
            let _ = write!(s, ",abs_err_{n}");
        }
        s.push_str(",objective,seconds\n");
        s.push_str(&self.method);
        for v in &self.values {
            let _ = write!(s, ",{}", fmt_num(*v));
        }
        match self.abs_errors() {
            Some(errs) => errs.iter().for_each(|e| {
                let _ = write!(s, ",{}", fmt_num(*e));
            }),
            None => self.names.iter().for_each(|_| s.push(',')),
        }
        let _ = writeln!(s, ",{},{}", fmt_num(self.objective), fmt_num(self.seconds));
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        write_text(path.as_ref(), &self.to_csv())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
        Self::parse_csv(file)
    }

    pub fn parse_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let row = rdr
            .records()
            .next()
            .ok_or_else(|| DataError::MissingColumn("method".into()))??;
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.into()));
        let num = |idx: usize, name: &str| -> Result<f64, DataError> {
            row[idx].trim().parse().map_err(|_| DataError::NonNumericCell {
                column: name.into(),
                row: 1,
            })
        };
        let names: Vec<ParamName> = headers
            .iter()
            .skip(1)
            .take_while(|h| !h.starts_with("abs_err_") && *h != "objective")
            .map(|h| h.parse().map_err(|_| DataError::MissingColumn(h.into())))
            .collect::<Result<_, _>>()?;
        let values = names
            .iter()
            .map(|n| num(col(n.as_str())?, n.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        let errs: Vec<Option<f64>> = names
            .iter()
            .map(|n| {
                let key = format!("abs_err_{n}");
                let i = col(&key)?;
                if row[i].trim().is_empty() {
                    Ok(None)
                } else {
                    num(i, &key).map(Some)
                }
            })
            .collect::<Result<_, DataError>>()?;
        // Absolute errors lose the sign, so the reference is kept only to
        // report the same errors back.
        let reference = if errs.iter().all(Option::is_some) {
            Some(values.iter().zip(&errs).map(|(v, e)| v - e.unwrap()).collect())
        } else {
            None
        };
        Ok(Self {
            method: row[col("method")?].to_string(),
            names,
            values,
            reference,
            objective: num(col("objective")?, "objective")?,
            seconds: num(col("seconds")?, "seconds")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_reference() {
        let r = EstimationResult {
            method: "DE".into(),
            names: vec![ParamName::Vbb, ParamName::lam_ccsf],
            values: vec![0.0649, 0.026],
            reference: Some(vec![0.064952435, 0.026]),
            objective: 1.5e-14,
            seconds: 12.5,
        };
        let back = EstimationResult::parse_csv(r.to_csv().as_bytes()).unwrap();
        assert_eq!(back.names, r.names);
        assert_eq!(back.values, r.values);
        assert_eq!(back.abs_errors(), r.abs_errors());
        assert_eq!(back.objective, r.objective);
        assert!(r.to_csv().starts_with("method,Vbb,lam_ccsf,abs_err_Vbb,abs_err_lam_ccsf,objective,seconds\n"));
    }

    #[test]
    fn round_trip_without_reference() {
        let r = EstimationResult {
            method: "PINN".into(),
            names: vec![ParamName::Vscsf],
            values: vec![0.026],
            reference: None,
            objective: 0.1,
            seconds: 1.0,
        };
        let back = EstimationResult::parse_csv(r.to_csv().as_bytes()).unwrap();
        assert_eq!(back, r);
    }
}
