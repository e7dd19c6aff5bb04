//! Physical constants of the brain submodel.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::num::Real;

use super::ModelError;

/// Physiology of the patient: compartment volumes (L), flows (L/h) and
/// passive permeability-surface products (L/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SystemParams<T> {
    pub Vbb: T,
    pub Vbm: T,
    pub Vccsf: T,
    pub Vscsf: T,
    pub Qbrain: T,
    pub Qcsink: T,
    pub Qssink: T,
    pub QbulkBC: T,
    /// Carried for completeness; the brain-mass balance uses `QbulkBC` only.
    pub QbulkCB: T,
    pub Qsout: T,
    pub Qsin: T,
    pub PSB: T,
    pub PSC: T,
    pub PSE: T,
}

/// Drug properties: transporter and metabolic clearances (L/h), unbound
/// fractions and unionized fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct DrugParams<T> {
    pub CLBin: T,
    pub CLBout: T,
    pub CLCin: T,
    pub CLCout: T,
    pub CLmet: T,
    pub fubb: T,
    pub fubm: T,
    pub fuccsf: T,
    pub lam_bb: T,
    pub lam_bm: T,
    pub lam_ccsf: T,
}

impl<T: Real> Default for SystemParams<T> {
    /// Reference physiology (abemaciclib virtual cancer patient).
    fn default() -> Self {
        Self {
            Vbb: T::lit(0.064952435),
            Vbm: T::lit(1.104115461),
            Vccsf: T::lit(0.103984624),
            Vscsf: T::lit(0.025996156),
            Qbrain: T::lit(38.0),
            Qcsink: T::lit(0.01277633),
            Qssink: T::lit(0.007761342),
            QbulkBC: T::lit(0.005164106),
            QbulkCB: T::lit(0.005164106),
            Qsout: T::lit(0.007489995),
            Qsin: T::lit(0.015251337),
            PSB: T::lit(135.0),
            PSC: T::lit(67.5),
            PSE: T::lit(300.0),
        }
    }
}

impl<T: Real> Default for DrugParams<T> {
    /// Reference drug (abemaciclib, 10 mg oral).
    fn default() -> Self {
        Self {
            CLBin: T::lit(0.0),
            CLBout: T::lit(110.0),
            CLCin: T::lit(11.9),
            CLCout: T::lit(0.0),
            CLmet: T::lit(0.0),
            fubb: T::lit(0.125),
            fubm: T::lit(0.044),
            fuccsf: T::lit(1.0),
            lam_bb: T::lit(0.033),
            lam_bm: T::lit(0.017),
            lam_ccsf: T::lit(0.026),
        }
    }
}

/// Complete parameter set of the brain submodel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub system: SystemParams<T>,
    pub drug: DrugParams<T>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self {
            system: SystemParams::default(),
            drug: DrugParams::default(),
        }
    }
}

/// Names of the 25 model parameters, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum ParamName {
    Vbb,
    Vbm,
    Vccsf,
    Vscsf,
    Qbrain,
    Qcsink,
    Qssink,
    QbulkBC,
    QbulkCB,
    Qsout,
    Qsin,
    PSB,
    PSC,
    PSE,
    CLBin,
    CLBout,
    CLCin,
    CLCout,
    CLmet,
    fubb,
    fubm,
    fuccsf,
    lam_bb,
    lam_bm,
    lam_ccsf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Volume,
    Flow,
    Permeability,
    Clearance,
    Fraction,
}

impl ParamName {
    pub const ALL: [ParamName; 25] = [
        ParamName::Vbb,
        ParamName::Vbm,
        ParamName::Vccsf,
        ParamName::Vscsf,
        ParamName::Qbrain,
        ParamName::Qcsink,
        ParamName::Qssink,
        ParamName::QbulkBC,
        ParamName::QbulkCB,
        ParamName::Qsout,
        ParamName::Qsin,
        ParamName::PSB,
        ParamName::PSC,
        ParamName::PSE,
        ParamName::CLBin,
        ParamName::CLBout,
        ParamName::CLCin,
        ParamName::CLCout,
        ParamName::CLmet,
        ParamName::fubb,
        ParamName::fubm,
        ParamName::fuccsf,
        ParamName::lam_bb,
        ParamName::lam_bm,
        ParamName::lam_ccsf,
    ];

    /// The six parameters estimated in the canonical inverse experiment.
    pub const DEFAULT_FREE: [ParamName; 6] = [
        ParamName::Vbb,
        ParamName::Vbm,
        ParamName::Vccsf,
        ParamName::Vscsf,
        ParamName::fubb,
        ParamName::lam_ccsf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Vbb => "Vbb",
            ParamName::Vbm => "Vbm",
            ParamName::Vccsf => "Vccsf",
            ParamName::Vscsf => "Vscsf",
            ParamName::Qbrain => "Qbrain",
            ParamName::Qcsink => "Qcsink",
            ParamName::Qssink => "Qssink",
            ParamName::QbulkBC => "QbulkBC",
            ParamName::QbulkCB => "QbulkCB",
            ParamName::Qsout => "Qsout",
            ParamName::Qsin => "Qsin",
            ParamName::PSB => "PSB",
            ParamName::PSC => "PSC",
            ParamName::PSE => "PSE",
            ParamName::CLBin => "CLBin",
            ParamName::CLBout => "CLBout",
            ParamName::CLCin => "CLCin",
            ParamName::CLCout => "CLCout",
            ParamName::CLmet => "CLmet",
            ParamName::fubb => "fubb",
            ParamName::fubm => "fubm",
            ParamName::fuccsf => "fuccsf",
            ParamName::lam_bb => "lam_bb",
            ParamName::lam_bm => "lam_bm",
            ParamName::lam_ccsf => "lam_ccsf",
        }
    }

    pub fn kind(self) -> ParamKind {
        use ParamName::*;
        match self {
            Vbb | Vbm | Vccsf | Vscsf => ParamKind::Volume,
            Qbrain | Qcsink | Qssink | QbulkBC | QbulkCB | Qsout | Qsin => ParamKind::Flow,
            PSB | PSC | PSE => ParamKind::Permeability,
            CLBin | CLBout | CLCin | CLCout | CLmet => ParamKind::Clearance,
            fubb | fubm | fuccsf | lam_bb | lam_bm | lam_ccsf => ParamKind::Fraction,
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = ModelError;

    /// Case-sensitive match on the canonical name; `lamccsf`-style spellings
    /// without the underscore are accepted as well.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ParamName::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s || p.as_str().replace('_', "") == s)
            .ok_or_else(|| ModelError::UnknownParameter(s.to_string()))
    }
}

impl<T: Copy> ModelParams<T> {
    pub fn get(&self, name: ParamName) -> T {
        let (s, d) = (&self.system, &self.drug);
        match name {
            ParamName::Vbb => s.Vbb,
            ParamName::Vbm => s.Vbm,
            ParamName::Vccsf => s.Vccsf,
            ParamName::Vscsf => s.Vscsf,
            ParamName::Qbrain => s.Qbrain,
            ParamName::Qcsink => s.Qcsink,
            ParamName::Qssink => s.Qssink,
            ParamName::QbulkBC => s.QbulkBC,
            ParamName::QbulkCB => s.QbulkCB,
            ParamName::Qsout => s.Qsout,
            ParamName::Qsin => s.Qsin,
            ParamName::PSB => s.PSB,
            ParamName::PSC => s.PSC,
            ParamName::PSE => s.PSE,
            ParamName::CLBin => d.CLBin,
            ParamName::CLBout => d.CLBout,
            ParamName::CLCin => d.CLCin,
            ParamName::CLCout => d.CLCout,
            ParamName::CLmet => d.CLmet,
            ParamName::fubb => d.fubb,
            ParamName::fubm => d.fubm,
            ParamName::fuccsf => d.fuccsf,
            ParamName::lam_bb => d.lam_bb,
            ParamName::lam_bm => d.lam_bm,
            ParamName::lam_ccsf => d.lam_ccsf,
        }
    }

    pub fn set(&mut self, name: ParamName, value: T) {
        let (s, d) = (&mut self.system, &mut self.drug);
        let slot = match name {
            ParamName::Vbb => &mut s.Vbb,
            ParamName::Vbm => &mut s.Vbm,
            ParamName::Vccsf => &mut s.Vccsf,
            ParamName::Vscsf => &mut s.Vscsf,
            ParamName::Qbrain => &mut s.Qbrain,
            ParamName::Qcsink => &mut s.Qcsink,
            ParamName::Qssink => &mut s.Qssink,
            ParamName::QbulkBC => &mut s.QbulkBC,
            ParamName::QbulkCB => &mut s.QbulkCB,
            ParamName::Qsout => &mut s.Qsout,
            ParamName::Qsin => &mut s.Qsin,
            ParamName::PSB => &mut s.PSB,
            ParamName::PSC => &mut s.PSC,
            ParamName::PSE => &mut s.PSE,
            ParamName::CLBin => &mut d.CLBin,
            ParamName::CLBout => &mut d.CLBout,
            ParamName::CLCin => &mut d.CLCin,
            ParamName::CLCout => &mut d.CLCout,
            ParamName::CLmet => &mut d.CLmet,
            ParamName::fubb => &mut d.fubb,
            ParamName::fubm => &mut d.fubm,
            ParamName::fuccsf => &mut d.fuccsf,
            ParamName::lam_bb => &mut d.lam_bb,
            ParamName::lam_bm => &mut d.lam_bm,
            ParamName::lam_ccsf => &mut d.lam_ccsf,
        };
        *slot = value;
    }

    /// Applies `f` to every parameter, e.g. to lift values into dual numbers.
    pub fn map<U: Copy>(&self, mut f: impl FnMut(T) -> U) -> ModelParams<U> {
        let s = &self.system;
        let d = &self.drug;
        ModelParams {
            system: SystemParams {
                Vbb: f(s.Vbb),
                Vbm: f(s.Vbm),
                Vccsf: f(s.Vccsf),
                Vscsf: f(s.Vscsf),
                Qbrain: f(s.Qbrain),
                Qcsink: f(s.Qcsink),
                Qssink: f(s.Qssink),
                QbulkBC: f(s.QbulkBC),
                QbulkCB: f(s.QbulkCB),
                Qsout: f(s.Qsout),
                Qsin: f(s.Qsin),
                PSB: f(s.PSB),
                PSC: f(s.PSC),
                PSE: f(s.PSE),
            },
            drug: DrugParams {
                CLBin: f(d.CLBin),
                CLBout: f(d.CLBout),
                CLCin: f(d.CLCin),
                CLCout: f(d.CLCout),
                CLmet: f(d.CLmet),
                fubb: f(d.fubb),
                fubm: f(d.fubm),
                fuccsf: f(d.fuccsf),
                lam_bb: f(d.lam_bb),
                lam_bm: f(d.lam_bm),
                lam_ccsf: f(d.lam_ccsf),
            },
        }
    }
}

impl<T: Real> ModelParams<T> {
    /// Checks the physical invariants: volumes and permeability products
    /// strictly positive, flows and clearances non-negative, fractions in [0, 1].
    pub fn validate(&self) -> Result<(), ModelError> {
        for name in ParamName::ALL {
            let v = self.get(name);
            let ok = v.is_finite()
                && match name.kind() {
                    ParamKind::Volume | ParamKind::Permeability => v > T::zero(),
                    ParamKind::Flow | ParamKind::Clearance => v >= T::zero(),
                    ParamKind::Fraction => v >= T::zero() && v <= T::one(),
                };
            if !ok {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: v.as_f64(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_tables() {
        let p = ModelParams::<f64>::default();
        assert_eq!(p.system.Vbb, 0.064952435);
        assert_eq!(p.system.Vscsf, 0.025996156);
        assert_eq!(p.system.Qsin, 0.015251337);
        assert_eq!(p.system.PSE, 300.0);
        assert_eq!(p.drug.CLBout, 110.0);
        assert_eq!(p.drug.lam_ccsf, 0.026);
        p.validate().unwrap();
    }

    #[test]
    fn names_round_trip_through_get_set() {
        let mut p = ModelParams::<f64>::default();
        for (i, name) in ParamName::ALL.iter().enumerate() {
            p.set(*name, i as f64 + 0.5);
        }
        for (i, name) in ParamName::ALL.iter().enumerate() {
            assert_eq!(p.get(*name), i as f64 + 0.5);
            assert_eq!(name.as_str().parse::<ParamName>().unwrap(), *name);
        }
        assert_eq!("lamccsf".parse::<ParamName>().unwrap(), ParamName::lam_ccsf);
        assert!("Vxx".parse::<ParamName>().is_err());
    }

    #[test]
    fn validate_rejects_out_of_range_fraction() {
        let mut p = ModelParams::<f64>::default();
        p.drug.fubb = 1.5;
        assert!(matches!(
            p.validate(),
            Err(ModelError::InvalidParameter { name: ParamName::fubb, .. })
        ));
        p.drug.fubb = 0.1;
        p.system.Vbm = 0.0;
        assert!(p.validate().is_err());
    }
}
