//! Four-compartment permeability-limited brain model.
//!
//! State ordering is always (brain blood, brain mass, cranial CSF, spinal CSF).
//! The model is linear with constant coefficients,
//!
//! ```text
//! dY/dt = A(θ)·Y + (Qbrain·C_art(t) / Vbb)·e₁
//! ```
//!
//! and is provided in two independent forms: [`rhs`] evaluates the mass
//! balances term by term, [`assemble_matrix`] builds `A(θ)` coefficient by
//! coefficient. The two are checked against each other in tests.

mod params;

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::PlasmaProfile;
use crate::num::{Field, Real};

pub use params::{DrugParams, ModelParams, ParamKind, ParamName, SystemParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter {name} = {value} violates its physical range")]
    InvalidParameter { name: ParamName, value: f64 },
    #[error("unknown model variant `{0}` (expected literal or mass-consistent)")]
    UnknownVariant(String),
}

/// Which form of the mass balances to use.
///
/// `Literal` keeps the original sign conventions term by term. `MassConsistent`
/// turns the uptake transporter term in the blood balance into an efflux and
/// makes spinal-to-cranial CSF flow an input to cranial CSF, so that the
/// CSF loop neither creates nor destroys drug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    #[default]
    Literal,
    MassConsistent,
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVariant::Literal => "literal",
            ModelVariant::MassConsistent => "mass-consistent",
        })
    }
}

impl FromStr for ModelVariant {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "literal" => Ok(ModelVariant::Literal),
            "mass-consistent" | "massconsistent" | "consistent" => Ok(ModelVariant::MassConsistent),
            other => Err(ModelError::UnknownVariant(other.to_string())),
        }
    }
}

/// One of the four brain compartments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Compartment {
    BrainBlood,
    BrainMass,
    CranialCsf,
    SpinalCsf,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [
        Compartment::BrainBlood,
        Compartment::BrainMass,
        Compartment::CranialCsf,
        Compartment::SpinalCsf,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name used in data files.
    pub fn column(self) -> &'static str {
        match self {
            Compartment::BrainBlood => "Cbb",
            Compartment::BrainMass => "Cbm",
            Compartment::CranialCsf => "Cccsf",
            Compartment::SpinalCsf => "Cscsf",
        }
    }
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Compartment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Compartment::ALL
            .into_iter()
            .find(|c| c.column().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown compartment `{s}`"))
    }
}

/// Concentrations (mg/L) in the four compartments, or their rates (mg/(L·h)).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConcentrationState<T>(pub [T; 4]);

impl<T: Copy> ConcentrationState<T> {
    pub fn new(cbb: T, cbm: T, cccsf: T, cscsf: T) -> Self {
        Self([cbb, cbm, cccsf, cscsf])
    }
    pub fn cbb(&self) -> T {
        self.0[0]
    }
    pub fn cbm(&self) -> T {
        self.0[1]
    }
    pub fn cccsf(&self) -> T {
        self.0[2]
    }
    pub fn cscsf(&self) -> T {
        self.0[3]
    }
}

impl<T: Real> ConcentrationState<T> {
    pub fn zero() -> Self {
        Self([T::zero(); 4])
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<usize> for ConcentrationState<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for ConcentrationState<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

/// Rate-coefficient matrix `A(θ)` (1/h), rows and columns in compartment order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrix<S>(pub [[S; 4]; 4]);

impl<S: Field> SystemMatrix<S> {
    pub fn apply(&self, y: &[S; 4]) -> [S; 4] {
        let mut out = [S::zero(); 4];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row[0] * y[0] + row[1] * y[1] + row[2] * y[2] + row[3] * y[3];
        }
        out
    }
}

impl<S> Index<(usize, usize)> for SystemMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.0[i][j]
    }
}

/// Builds `A(θ)` from the coefficient definitions.
///
/// Generic over [`Field`] so that it can be evaluated over dual numbers to
/// obtain `∂A/∂θ`.
pub fn assemble_matrix<S: Field>(p: &ModelParams<S>, variant: ModelVariant) -> SystemMatrix<S> {
    let s = &p.system;
    let d = &p.drug;
    let z = S::zero();

    // Passive and transporter conductances (L/h) that recur below.
    let psb_bb = s.PSB * d.lam_bb * d.fubb;
    let psb_bm = s.PSB * d.lam_bm * d.fubm;
    let psc_bb = s.PSC * d.lam_bb * d.fubb;
    let psc_ccsf = s.PSC * d.lam_ccsf * d.fuccsf;
    let pse_bm = s.PSE * d.lam_bm * d.fubm;
    let pse_ccsf = s.PSE * d.lam_ccsf * d.fuccsf;
    let clbin = d.CLBin * d.fubb;
    let clbout = d.CLBout * d.fubm;
    let clcin = d.CLCin * d.fubb;
    let clcout = d.CLCout * d.fuccsf;

    let uptake_in_blood = match variant {
        ModelVariant::Literal => clbin,
        ModelVariant::MassConsistent => -clbin,
    };
    let spinal_return = match variant {
        ModelVariant::Literal => -s.Qsout,
        ModelVariant::MassConsistent => s.Qsout,
    };

    let a11 = (-s.Qbrain - psb_bb + uptake_in_blood - psc_bb - clcin) / s.Vbb;
    let a12 = (psb_bm + clbout) / s.Vbb;
    let a13 = (psc_ccsf + clcout + s.Qcsink) / s.Vbb;
    let a14 = s.Qssink / s.Vbb;

    let a21 = (psb_bb + clbin) / s.Vbm;
    let a22 = -(psb_bm + clbout + s.QbulkBC + pse_bm + d.CLmet) / s.Vbm;
    let a23 = pse_ccsf / s.Vbm;

    let a31 = (psc_bb + clcin) / s.Vccsf;
    let a32 = pse_bm / s.Vccsf;
    let a33 = -(psc_ccsf + clcout + pse_ccsf + s.Qsin + s.Qcsink) / s.Vccsf;
    let a34 = spinal_return / s.Vccsf;

    let a43 = s.Qsin / s.Vscsf;
    let a44 = -(s.Qsout + s.Qssink) / s.Vscsf;

    SystemMatrix([
        [a11, a12, a13, a14],
        [a21, a22, a23, z],
        [a31, a32, a33, a34],
        [z, z, a43, a44],
    ])
}

/// Coefficient multiplying `C_art` in the brain-blood balance, `Qbrain / Vbb`.
pub fn forcing_gain<S: Field>(p: &ModelParams<S>) -> S {
    p.system.Qbrain / p.system.Vbb
}

/// Arterial inflow `Qbrain · C_art(t)` (mg/h).
pub fn forcing<T: Real>(t: T, sys: &SystemParams<T>, plasma: &PlasmaProfile<T>) -> T {
    sys.Qbrain * plasma.interp(t)
}

/// Right-hand side of the mass balances, written out term by term.
pub fn rhs<T: Real>(
    t: T,
    y: &ConcentrationState<T>,
    p: &ModelParams<T>,
    plasma: &PlasmaProfile<T>,
    variant: ModelVariant,
) -> ConcentrationState<T> {
    rhs_with_forcing(y, p, forcing(t, &p.system, plasma), variant)
}

/// [`rhs`] with the arterial inflow `Qbrain · C_art` already evaluated.
pub fn rhs_with_forcing<T: Real>(
    y: &ConcentrationState<T>,
    p: &ModelParams<T>,
    inflow: T,
    variant: ModelVariant,
) -> ConcentrationState<T> {
    let s = &p.system;
    let d = &p.drug;
    let [cbb, cbm, cccsf, cscsf] = y.0;

    let uptake_sign = match variant {
        ModelVariant::Literal => T::one(),
        ModelVariant::MassConsistent => -T::one(),
    };
    let spinal_return_sign = match variant {
        ModelVariant::Literal => -T::one(),
        ModelVariant::MassConsistent => T::one(),
    };

    let blood = inflow - s.Qbrain * cbb
        + s.PSB * (d.lam_bm * d.fubm * cbm - d.lam_bb * d.fubb * cbb)
        + uptake_sign * d.CLBin * d.fubb * cbb
        + d.CLBout * d.fubm * cbm
        + s.PSC * (d.lam_ccsf * d.fuccsf * cccsf - d.lam_bb * d.fubb * cbb)
        - d.CLCin * d.fubb * cbb
        + d.CLCout * d.fuccsf * cccsf
        + s.Qcsink * cccsf
        + s.Qssink * cscsf;

    let mass = s.PSB * (d.lam_bb * d.fubb * cbb - d.lam_bm * d.fubm * cbm)
        + d.CLBin * d.fubb * cbb
        - d.CLBout * d.fubm * cbm
        - s.QbulkBC * cbm
        + s.PSE * (d.lam_ccsf * d.fuccsf * cccsf - d.lam_bm * d.fubm * cbm)
        - d.CLmet * cbm;

    let cranial = s.PSC * (d.lam_bb * d.fubb * cbb - d.lam_ccsf * d.fuccsf * cccsf)
        + d.CLCin * d.fubb * cbb
        - d.CLCout * d.fuccsf * cccsf
        + spinal_return_sign * s.Qsout * cscsf
        + s.PSE * (d.lam_bm * d.fubm * cbm - d.lam_ccsf * d.fuccsf * cccsf)
        - s.Qsin * cccsf
        - s.Qcsink * cccsf;

    let spinal = s.Qsin * cccsf - s.Qsout * cscsf - s.Qssink * cscsf;

    ConcentrationState([blood / s.Vbb, mass / s.Vbm, cranial / s.Vccsf, spinal / s.Vscsf])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelParams<f64> {
        ModelParams::default()
    }

    #[test]
    fn spinal_row_matches_hand_arithmetic() {
        let a = assemble_matrix(&reference(), ModelVariant::Literal);
        let expected = -(0.007489995 + 0.007761342) / 0.025996156;
        assert!((a[(3, 3)] - expected).abs() < 1e-15);
        assert!((a[(3, 3)] + 0.586676).abs() < 1e-6);
        assert_eq!(a[(3, 0)], 0.0);
        assert_eq!(a[(3, 1)], 0.0);
    }

    #[test]
    fn spinal_flow_balance() {
        let a = assemble_matrix(&reference(), ModelVariant::Literal);
        assert!((a[(3, 2)] + a[(3, 3)]).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_negative_for_reference_parameters() {
        for variant in [ModelVariant::Literal, ModelVariant::MassConsistent] {
            let a = assemble_matrix(&reference(), variant);
            for i in 0..4 {
                assert!(a[(i, i)] < 0.0, "diag {i} = {}", a[(i, i)]);
            }
        }
    }

    #[test]
    fn blood_to_spinal_coupling_term() {
        let p = reference();
        let a = assemble_matrix(&p, ModelVariant::Literal);
        assert_eq!(a[(0, 3)], p.system.Qssink / p.system.Vbb);
        assert_eq!(a[(2, 3)], -p.system.Qsout / p.system.Vccsf);
    }

    #[test]
    fn no_transport_gives_zero_matrix() {
        let mut p = reference();
        for name in ParamName::ALL {
            let v = match name.kind() {
                ParamKind::Volume => 1.0,
                ParamKind::Fraction => p.get(name),
                _ => 0.0,
            };
            p.set(name, v);
        }
        let a = assemble_matrix(&p, ModelVariant::Literal);
        assert!(a.0.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn variants_differ_only_in_two_entries() {
        let mut p = reference();
        p.drug.CLBin = 3.0;
        let lit = assemble_matrix(&p, ModelVariant::Literal);
        let mc = assemble_matrix(&p, ModelVariant::MassConsistent);
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) == (0, 0) || (i, j) == (2, 3) {
                    assert_ne!(lit[(i, j)], mc[(i, j)]);
                } else {
                    assert_eq!(lit[(i, j)], mc[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn forcing_examples() {
        let plasma = PlasmaProfile::new(vec![0.0, 48.0], vec![1.0, 1.0]).unwrap();
        let mut sys = SystemParams::<f64>::default();
        assert_eq!(forcing(3.0, &sys, &plasma), 38.0);
        let p05 = PlasmaProfile::new(vec![0.0, 48.0], vec![0.05, 0.05]).unwrap();
        assert!((forcing(1.0, &sys, &p05) - 1.9).abs() < 1e-14);
        sys.Qbrain = 0.0;
        assert_eq!(forcing(3.0, &sys, &plasma), 0.0);
    }

    #[test]
    fn rhs_examples() {
        let p = reference();
        let one = PlasmaProfile::new(vec![0.0, 48.0], vec![1.0, 1.0]).unwrap();
        let zero = PlasmaProfile::new(vec![0.0, 48.0], vec![0.0, 0.0]).unwrap();
        let v = ModelVariant::Literal;

        let r = rhs(0.0, &ConcentrationState::zero(), &p, &one, v);
        assert!((r.cbb() - 38.0 / 0.064952435).abs() < 1e-9);
        assert!((r.cbb() - 585.04).abs() < 0.01);
        assert_eq!(&r.0[1..], &[0.0, 0.0, 0.0]);

        let r = rhs(0.0, &ConcentrationState::zero(), &p, &zero, v);
        assert_eq!(r.0, [0.0; 4]);

        let y = ConcentrationState::new(0.0, 0.0, 0.0, 1.0);
        let r = rhs(0.0, &y, &p, &zero, v);
        assert!((r.cscsf() + 0.586676).abs() < 1e-6);
    }

    #[test]
    fn matrix_form_matches_reference_rhs() {
        let p = reference();
        let plasma = PlasmaProfile::new(vec![0.0, 10.0], vec![0.02, 0.07]).unwrap();
        let y = ConcentrationState::new(0.05, 0.01, 0.003, 0.002);
        for variant in [ModelVariant::Literal, ModelVariant::MassConsistent] {
            let a = assemble_matrix(&p, variant);
            let direct = rhs(4.0, &y, &p, &plasma, variant);
            let mut via_matrix = a.apply(&y.0);
            via_matrix[0] += forcing_gain(&p) * plasma.interp(4.0);
            for i in 0..4 {
                let scale = direct[i].abs().max(1.0);
                assert!((direct[i] - via_matrix[i]).abs() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn single_precision_assembly() {
        let a = assemble_matrix(&ModelParams::<f32>::default(), ModelVariant::Literal);
        assert!((a[(3, 3)] + 0.586676_f32).abs() < 1e-5);
    }
}
