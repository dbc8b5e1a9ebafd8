//! Random dynamical systems: a noisy circle rotation, a randomly forced
//! linear map and the stochastic Stuart–Landau oscillator.

mod spectrum;
mod trajectory;

pub use spectrum::{true_spectrum, ModeSelection, TimeScale, TrueSpectrum};
pub use trajectory::{read_trajectory, write_trajectory, Trajectory};

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// `x ↦ x + ν + ω (mod 2π)` with `ω ~ U[-h, h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomRotation {
    pub nu: f64,
    pub dyn_noise_halfwidth: f64,
}

impl Default for RandomRotation {
    fn default() -> Self {
        Self { nu: 0.5, dyn_noise_halfwidth: 0.5 }
    }
}

/// `x ↦ A x + b` with each component of `b` drawn from `U[-h, h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyLinear {
    /// Row-major square matrix.
    pub a: Vec<Vec<f64>>,
    pub forcing_halfwidth: f64,
}

impl NoisyLinear {
    pub const REFERENCE_A: [[f64; 4]; 4] = [
        [0.75, 0.5, 0.1, 2.0],
        [0.0, 0.2, 0.8, 1.0],
        [0.0, -0.8, 0.2, 0.5],
        [0.0, 0.0, 0.0, -0.85],
    ];

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

impl Default for NoisyLinear {
    fn default() -> Self {
        Self {
            a: Self::REFERENCE_A.iter().map(|r| r.to_vec()).collect(),
            forcing_halfwidth: 0.5,
        }
    }
}

/// Stochastic Stuart–Landau oscillator in Cartesian form,
///
/// ```text
/// dx = [(δ − r²)x − (γ − βr²)y] dt + ε dW_x
/// dy = [(γ − βr²)x + (δ − r²)y] dt + ε dW_y
/// ```
///
/// integrated by Euler–Maruyama with `substeps` steps per recorded `dt`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StuartLandau {
    pub gamma: f64,
    pub beta: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default = "default_safety_radius")]
    pub safety_radius: f64,
}

fn one() -> usize {
    1
}

fn default_safety_radius() -> f64 {
    100.0
}

impl StuartLandau {
    /// Angular frequency of the limit cycle, `γ − βδ`.
    pub fn omega0(&self) -> f64 {
        self.gamma - self.beta * self.delta
    }
}

impl Default for StuartLandau {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            beta: 1.0,
            delta: 0.5,
            epsilon: 0.05,
            dt: 0.05,
            substeps: 1,
            safety_radius: default_safety_radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    RandomRotation(RandomRotation),
    NoisyLinear(NoisyLinear),
    StuartLandau(StuartLandau),
}

impl SystemSpec {
    pub fn rotation() -> Self {
        Self::RandomRotation(RandomRotation::default())
    }

    pub fn linear() -> Self {
        Self::NoisyLinear(NoisyLinear::default())
    }

    pub fn stuart_landau() -> Self {
        Self::StuartLandau(StuartLandau::default())
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Self::RandomRotation(_) => 1,
            Self::NoisyLinear(s) => s.dim(),
            Self::StuartLandau(_) => 2,
        }
    }

    /// Model time between recorded samples.
    pub fn dt(&self) -> f64 {
        match self {
            Self::StuartLandau(s) => s.dt,
            _ => 1.0,
        }
    }

    pub fn default_burn_in(&self) -> usize {
        match self {
            Self::RandomRotation(_) => 0,
            Self::NoisyLinear(_) | Self::StuartLandau(_) => 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and ≥ 0, got {v}")))
            }
        };
        match self {
            Self::RandomRotation(s) => {
                nonneg("dyn_noise_halfwidth", s.dyn_noise_halfwidth)?;
                if !s.nu.is_finite() {
                    return Err(Error::invalid("nu must be finite"));
                }
            }
            Self::NoisyLinear(s) => {
                nonneg("forcing_halfwidth", s.forcing_halfwidth)?;
                let d = s.dim();
                if d == 0 || s.a.iter().any(|row| row.len() != d) {
                    return Err(Error::invalid("linear system matrix must be square and non-empty"));
                }
                if s.a.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("linear system matrix has non-finite entries"));
                }
            }
            Self::StuartLandau(s) => {
                nonneg("epsilon", s.epsilon)?;
                if !(s.dt.is_finite() && s.dt > 0.0) {
                    return Err(Error::invalid(format!("dt must be > 0, got {}", s.dt)));
                }
                if s.substeps == 0 {
                    return Err(Error::invalid("substeps must be ≥ 1"));
                }
                if !(s.safety_radius > 0.0) {
                    return Err(Error::invalid("safety_radius must be > 0"));
                }
                if [s.gamma, s.beta, s.delta].iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("gamma, beta and delta must be finite"));
                }
            }
        }
        Ok(())
    }

    fn default_initial_state(&self, rng: &mut rng::StreamRng) -> Vec<f64> {
        match self {
            Self::RandomRotation(_) => vec![rng.random_range(0.0..TAU)],
            Self::NoisyLinear(s) => vec![0.0; s.dim()],
            Self::StuartLandau(s) => vec![s.delta.max(0.0).sqrt(), 0.0],
        }
    }
}

/// Simulates `n_samples` recorded states after discarding `burn_in`, starting
/// from the system's default initial state.
pub fn simulate(spec: &SystemSpec, n_samples: usize, seed: u64, burn_in: usize) -> Result<Trajectory> {
    run(spec, None, n_samples, seed, burn_in)
}

/// As [`simulate`], starting from `x0`. With `burn_in = 0` the first recorded
/// state is `x0` itself.
pub fn simulate_from(
    spec: &SystemSpec,
    x0: &[f64],
    n_samples: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Trajectory> {
    run(spec, Some(x0), n_samples, seed, burn_in)
}

fn run(
    spec: &SystemSpec,
    x0: Option<&[f64]>,
    n_samples: usize,
    seed: u64,
    burn_in: usize,
) -> Result<Trajectory> {
    spec.validate()?;
    if n_samples < 2 {
        return Err(Error::invalid(format!("n_samples must be ≥ 2, got {n_samples}")));
    }
    let dim = spec.state_dim();
    let mut rng = rng::stream(seed, rng::DYNAMICS);
    let mut x = match x0 {
        Some(x0) if x0.len() != dim => {
            return Err(Error::Shape(format!(
                "initial state has dimension {}, system expects {dim}",
                x0.len()
            )))
        }
        Some(x0) => x0.to_vec(),
        None => spec.default_initial_state(&mut rng),
    };
    if let SystemSpec::RandomRotation(_) = spec {
        x[0] = wrap_angle(x[0]);
    }

    let mut states = Vec::with_capacity(n_samples * dim);
    let total = burn_in + n_samples;
    for step in 0..total {
        if step >= burn_in {
            states.extend_from_slice(&x);
        }
        if step + 1 < total {
            advance(spec, &mut x, &mut rng, step + 1)?;
        }
    }
    Trajectory::new(states, dim, spec.dt(), seed, burn_in)
}

/// Wraps into `[0, 2π)`; `rem_euclid` alone can round up to exactly `2π`.
fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn advance(spec: &SystemSpec, x: &mut [f64], rng: &mut rng::StreamRng, step: usize) -> Result<()> {
    match spec {
        SystemSpec::RandomRotation(s) => {
            let h = s.dyn_noise_halfwidth;
            let w = if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
            x[0] = wrap_angle(x[0] + s.nu + w);
        }
        SystemSpec::NoisyLinear(s) => {
            let h = s.forcing_halfwidth;
            let next: Vec<f64> = s
                .a
                .iter()
                .map(|row| {
                    let ax: f64 = row.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
                    if h > 0.0 {
                        ax + rng.random_range(-h..=h)
                    } else {
                        ax
                    }
                })
                .collect();
            x.copy_from_slice(&next);
        }
        SystemSpec::StuartLandau(s) => {
            let h = s.dt / s.substeps as f64;
            let scale = s.epsilon * h.sqrt();
            let (mut px, mut py) = (x[0], x[1]);
            for _ in 0..s.substeps {
                let r2 = px * px + py * py;
                let growth = s.delta - r2;
                let turn = s.gamma - s.beta * r2;
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                let dx = (growth * px - turn * py) * h + scale * nx;
                let dy = (turn * px + growth * py) * h + scale * ny;
                px += dx;
                py += dy;
            }
            let radius = px.hypot(py);
            if !(radius <= s.safety_radius) {
                return Err(Error::Diverged { step, radius, limit: s.safety_radius });
            }
            x[0] = px;
            x[1] = py;
        }
    }
    Ok(())
}
