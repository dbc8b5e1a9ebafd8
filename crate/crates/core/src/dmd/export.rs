use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Algorithm, ContinuousEigenvalue, DmdOptions, DmdResult};
use crate::error::Result;

/// JSON document for one decomposition. Complex numbers are `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmdReport {
    pub algorithm: Algorithm,
    pub options: DmdOptions,
    pub rank: usize,
    pub eigenvalues: Vec<Complex64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<Vec<ContinuousEigenvalue>>,
    pub singular_values: Vec<f64>,
    pub eigvec_condition: f64,
    /// One inner list per mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Vec<Complex64>>>,
    /// One inner list per eigenfunction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenfunction_samples: Option<Vec<Vec<Complex64>>>,
}

impl DmdReport {
    pub fn new(result: &DmdResult, options: &DmdOptions) -> Self {
        Self {
            algorithm: result.algorithm,
            options: options.clone(),
            rank: result.rank(),
            eigenvalues: result.eigenvalues.clone(),
            continuous: None,
            singular_values: result.singular_values.clone(),
            eigvec_condition: result.eigvec_condition,
            modes: None,
            eigenfunction_samples: None,
        }
    }

    pub fn with_continuous(mut self, result: &DmdResult, dt: f64) -> Result<Self> {
        self.continuous = Some(result.continuous_spectrum(dt)?);
        Ok(self)
    }

    pub fn with_modes(mut self, result: &DmdResult) -> Self {
        self.modes = Some(columns(&result.modes));
        self
    }

    pub fn with_eigenfunctions(mut self, result: &DmdResult) -> Self {
        self.eigenfunction_samples = Some(columns(&result.eigenfunctions.transpose()));
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn columns(m: &DMatrix<Complex64>) -> Vec<Vec<Complex64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

/// Eigenvalues of a saved [`DmdReport`].
pub fn read_result_eigenvalues(json: &str) -> Result<Vec<Complex64>> {
    let report: DmdReport = serde_json::from_str(json)?;
    Ok(report.eigenvalues)
}
