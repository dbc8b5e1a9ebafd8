use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SystemSpec;
use crate::dmd::linalg;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScale {
    /// Eigenvalues of the one-step operator.
    DiscreteUnitStep,
    /// Generator eigenvalues, compared after `log(λ)/dt`.
    ContinuousRate,
}

/// Which analytic eigenvalues to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSelection {
    /// Harmonics `n` of the rotation, `λ_n = e^{inν} E[e^{inω}]`.
    Rotation { modes: Vec<i32> },
    /// Every eigenvalue of the linear map.
    All,
    /// `(l, n)` pairs of the Stuart–Landau generator.
    StuartLandau { modes: Vec<(u32, i32)> },
}

impl ModeSelection {
    /// `[1, −1, 2, −2, …, k, −k]`.
    pub fn rotation_pairs(k: i32) -> Self {
        Self::Rotation { modes: (1..=k).flat_map(|n| [n, -n]).collect() }
    }

    /// `(0, ±1), …, (0, ±k)`.
    pub fn stuart_landau_phase(k: i32) -> Self {
        Self::StuartLandau { modes: (1..=k).flat_map(|n| [(0, n), (0, -n)]).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub time_scale: TimeScale,
    pub validity_note: String,
}

pub fn true_spectrum(spec: &SystemSpec, selection: &ModeSelection) -> Result<TrueSpectrum> {
    spec.validate()?;
    match (spec, selection) {
        (SystemSpec::RandomRotation(s), ModeSelection::Rotation { modes }) => {
            non_empty(modes.len())?;
            let h = s.dyn_noise_halfwidth;
            let eigenvalues = modes
                .iter()
                .map(|&n| {
                    let n = f64::from(n);
                    // E[e^{inω}] for ω ~ U[-h, h] is sinc(nh).
                    let damping = if n * h == 0.0 { 1.0 } else { (n * h).sin() / (n * h) };
                    Complex64::from_polar(damping, n * s.nu)
                })
                .collect();
            Ok(TrueSpectrum {
                eigenvalues,
                time_scale: TimeScale::DiscreteUnitStep,
                validity_note: "exact".into(),
            })
        }
        (SystemSpec::NoisyLinear(s), ModeSelection::All) => {
            let d = s.dim();
            let a = DMatrix::from_fn(d, d, |i, j| Complex64::new(s.a[i][j], 0.0));
            Ok(TrueSpectrum {
                eigenvalues: linalg::eigenvalues(&a)?,
                time_scale: TimeScale::DiscreteUnitStep,
                validity_note: "exact for zero-mean forcing".into(),
            })
        }
        (SystemSpec::StuartLandau(s), ModeSelection::StuartLandau { modes }) => {
            non_empty(modes.len())?;
            let w0 = s.omega0();
            let eigenvalues = modes
                .iter()
                .map(|&(l, n)| {
                    let nf = f64::from(n);
                    let re = if l == 0 {
                        -nf * nf * s.epsilon * s.epsilon * (1.0 + s.beta * s.beta) / (2.0 * s.delta)
                    } else {
                        -2.0 * f64::from(l) * s.delta
                    };
                    Complex64::new(re, nf * w0)
                })
                .collect();
            Ok(TrueSpectrum {
                eigenvalues,
                time_scale: TimeScale::ContinuousRate,
                validity_note: "perturbative in ε: O(ε⁴) for l = 0, O(ε²) for l > 0".into(),
            })
        }
        _ => Err(Error::invalid(format!(
            "mode selection {selection:?} does not apply to this system"
        ))),
    }
}

fn non_empty(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("empty mode index set"))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds_sim::{NoisyLinear, StuartLandau};
    use rand::Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn rotation_first_harmonic() {
        let ts = true_spectrum(&SystemSpec::rotation(), &ModeSelection::Rotation { modes: vec![1] }).unwrap();
        let lam = ts.eigenvalues[0];
        assert!(close(lam, Complex64::new(0.8414709848, 0.4596976941), 1e-9));
        // Closed form i(1 − e^{in})/n.
        let i = Complex64::i();
        assert!(close(lam, i * (Complex64::new(1.0, 0.0) - (i * 1.0).exp()), 1e-14));
    }

    #[test]
    fn rotation_matches_closed_form_for_all_harmonics() {
        let ts = true_spectrum(&SystemSpec::rotation(), &ModeSelection::rotation_pairs(5)).unwrap();
        let i = Complex64::i();
        let modes = [1, -1, 2, -2, 3, -3, 4, -4, 5, -5];
        for (&n, lam) in modes.iter().zip(&ts.eigenvalues) {
            let nf = f64::from(n);
            let expect = (i - i * (i * nf).exp()) / nf;
            assert!(close(*lam, expect, 1e-14), "n={n}");
        }
    }

    #[test]
    fn rotation_eigenvalue_monte_carlo() {
        let mut rng = crate::rng::stream(99, "monte-carlo");
        let n = 1_000_000;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let w: f64 = rng.random_range(-0.5..=0.5);
            acc += Complex64::from_polar(1.0, 0.5 + w);
        }
        acc /= n as f64;
        let ts = true_spectrum(&SystemSpec::rotation(), &ModeSelection::Rotation { modes: vec![1] }).unwrap();
        // Per-component standard error is below 1/sqrt(n) = 1e-3.
        assert!(close(acc, ts.eigenvalues[0], 3e-3));
    }

    #[test]
    fn rotation_zero_mode_is_one() {
        let ts = true_spectrum(&SystemSpec::rotation(), &ModeSelection::Rotation { modes: vec![0] }).unwrap();
        assert_eq!(ts.eigenvalues[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn conjugate_pairs_are_closed() {
        let ts = true_spectrum(&SystemSpec::rotation(), &ModeSelection::rotation_pairs(4)).unwrap();
        for pair in ts.eigenvalues.chunks(2) {
            assert!(close(pair[0], pair[1].conj(), 1e-15));
        }
        let sl = true_spectrum(&SystemSpec::stuart_landau(), &ModeSelection::stuart_landau_phase(6)).unwrap();
        for pair in sl.eigenvalues.chunks(2) {
            assert!(close(pair[0], pair[1].conj(), 1e-15));
        }
    }

    #[test]
    fn linear_reference_eigenvalues() {
        let ts = true_spectrum(&SystemSpec::NoisyLinear(NoisyLinear::default()), &ModeSelection::All).unwrap();
        let mut expect = vec![
            Complex64::new(0.75, 0.0),
            Complex64::new(-0.85, 0.0),
            Complex64::new(0.2, 0.8),
            Complex64::new(0.2, -0.8),
        ];
        for lam in &ts.eigenvalues {
            let k = expect.iter().position(|e| close(*e, *lam, 1e-12)).expect("unexpected eigenvalue");
            expect.remove(k);
        }
        assert!(expect.is_empty());
    }

    #[test]
    fn stuart_landau_values() {
        let spec = SystemSpec::StuartLandau(StuartLandau::default());
        let ts = true_spectrum(&spec, &ModeSelection::StuartLandau { modes: vec![(0, 1), (1, 0), (0, 6)] }).unwrap();
        assert_eq!(ts.time_scale, TimeScale::ContinuousRate);
        assert!(close(ts.eigenvalues[0], Complex64::new(-0.005, 0.5), 1e-15));
        assert!(close(ts.eigenvalues[1], Complex64::new(-1.0, 0.0), 1e-15));
        assert!(close(ts.eigenvalues[2], Complex64::new(-0.18, 3.0), 1e-14));
    }

    #[test]
    fn rejects_empty_and_mismatched_selections() {
        assert!(true_spectrum(&SystemSpec::rotation(), &ModeSelection::Rotation { modes: vec![] }).is_err());
        assert!(true_spectrum(&SystemSpec::rotation(), &ModeSelection::All).is_err());
    }
}
