use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, ModelVariant};
use crate::ode::{PlasmaSpec, SolveMethod};

use super::artifacts::write_text;
use super::DataError;

/// Everything needed to regenerate a synthetic dataset, including the exact
/// parameter values used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub points: usize,
    pub horizon: f64,
    pub noise_sd: f64,
    pub seed: u64,
    pub variant: ModelVariant,
    pub solver: SolveMethod,
    pub plasma: PlasmaSpec,
    pub reference: ModelParams<f64>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| DataError::Manifest(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = Manifest {
            points: 200,
            horizon: 48.0,
            noise_sd: 0.0,
            seed: 3,
            variant: ModelVariant::Literal,
            solver: SolveMethod::ExpmOracle,
            plasma: PlasmaSpec::default(),
            reference: ModelParams::default(),
        };
        let back: Manifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
