use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousEigenvalue {
    pub value: Complex64,
    /// `|Im|` lies within 5% of the Nyquist rate `π/dt`.
    pub aliased: bool,
}

/// `log(λ)/dt` on the principal branch.
pub fn to_continuous_spectrum(eigenvalues: &[Complex64], dt: f64) -> Result<Vec<ContinuousEigenvalue>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
    }
    let nyquist = std::f64::consts::PI / dt;
    eigenvalues
        .iter()
        .enumerate()
        .map(|(index, lam)| {
            if lam.norm() == 0.0 {
                return Err(Error::ZeroEigenvalue { index });
            }
            let value = lam.ln() / dt;
            Ok(ContinuousEigenvalue { value, aliased: value.im.abs() >= 0.95 * nyquist })
        })
        .collect()
}
