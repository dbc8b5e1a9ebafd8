//! Observable dictionaries, measurement noise, delay embeddings and dual
//! observables.

mod embed;
mod series;

pub use embed::{build_dual, hankel_embed, snapshot_pair, DualTransform, EmbeddingPlan};
pub use series::{align, read_series, write_series, SeriesMatrix};

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rds_sim::Trajectory;
use crate::rng;

/// A scalar function of the state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `sin(k x_c)`
    Sin { harmonic: i32, coord: usize },
    /// `cos(k x_c)`
    Cos { harmonic: i32, coord: usize },
    Coordinate { index: usize },
    /// Sum of all state coordinates.
    CoordinateSum,
    /// `Σ_k sin(k x_c)`
    SinSum { harmonics: Vec<i32>, coord: usize },
    /// `e^{ik(θ − log 2r)}` of a planar state in polar form.
    PhaseExp { harmonic: i32 },
    /// `Σ_{k=1..K} (f_k + f_{−k})` of [`Observable::PhaseExp`], a real function.
    PhaseExpSum { max_harmonic: u32 },
}

impl Observable {
    pub fn is_complex(&self) -> bool {
        matches!(self, Self::PhaseExp { .. })
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Self::Sin { coord, .. } | Self::Cos { coord, .. } | Self::SinSum { coord, .. } => *coord < dim,
            Self::Coordinate { index } => *index < dim,
            Self::CoordinateSum => dim >= 1,
            Self::PhaseExp { .. } | Self::PhaseExpSum { .. } => dim == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("observable {self:?} is undefined on {dim}-dimensional states")))
        }
    }

    fn eval(&self, x: &[f64]) -> std::result::Result<Complex64, String> {
        let real = |v: f64| Ok(Complex64::new(v, 0.0));
        match self {
            Self::Sin { harmonic, coord } => real((f64::from(*harmonic) * x[*coord]).sin()),
            Self::Cos { harmonic, coord } => real((f64::from(*harmonic) * x[*coord]).cos()),
            Self::Coordinate { index } => real(x[*index]),
            Self::CoordinateSum => real(x.iter().sum()),
            Self::SinSum { harmonics, coord } => {
                real(harmonics.iter().map(|&k| (f64::from(k) * x[*coord]).sin()).sum())
            }
            Self::PhaseExp { harmonic } => {
                let phase = log_phase(x)?;
                Ok(Complex64::from_polar(1.0, f64::from(*harmonic) * phase))
            }
            Self::PhaseExpSum { max_harmonic } => {
                let phase = log_phase(x)?;
                real((1..=*max_harmonic).map(|k| 2.0 * (f64::from(k) * phase).cos()).sum())
            }
        }
    }
}

/// `θ − log(2r)` of a planar state.
fn log_phase(x: &[f64]) -> std::result::Result<f64, String> {
    let r = x[0].hypot(x[1]);
    if !(r > 0.0) || !r.is_finite() {
        return Err(format!("radius {r} is not positive"));
    }
    Ok(x[1].atan2(x[0]) - (2.0 * r).ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedObservable {
    pub name: String,
    pub observable: Observable,
}

/// Ordered list of named observables; row `i` of an evaluated series is entry `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableDict {
    label: String,
    entries: Vec<NamedObservable>,
}

impl ObservableDict {
    pub fn new(label: impl Into<String>, entries: Vec<NamedObservable>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("observable dictionary is empty"));
        }
        let mut names = HashSet::new();
        for e in &entries {
            if !names.insert(e.name.as_str()) {
                return Err(Error::invalid(format!("duplicate observable name `{}`", e.name)));
            }
        }
        Ok(Self { label: label.into(), entries })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[NamedObservable] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_complex(&self) -> bool {
        self.entries.iter().any(|e| e.observable.is_complex())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        self.entries.iter().try_for_each(|e| e.observable.check_dim(dim))
    }
}

/// Named dictionaries used by the reference experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionaryPreset {
    /// `sin(x), …, sin(Kx), cos(x), …, cos(Kx)`.
    RotationTrig { harmonics: u32 },
    /// The state coordinates.
    LinearState { dim: usize },
    /// `x_1 + … + x_d`.
    LinearSum { dim: usize },
    /// `sin(x) + … + sin(Kx)`.
    RotationSum { harmonics: u32 },
    /// `f_1, f_{−1}, …, f_K, f_{−K}` with `f_k = e^{ik(θ − log 2r)}`.
    StuartLandauExp { harmonics: u32 },
    /// `Σ_{k=1..K} (f_k + f_{−k})`.
    StuartLandauExpSum { harmonics: u32 },
}

impl DictionaryPreset {
    pub fn build(&self) -> Result<ObservableDict> {
        let named = |name: String, observable| NamedObservable { name, observable };
        let k_range = |k: u32| -> Result<Vec<i32>> {
            if k == 0 {
                return Err(Error::invalid("harmonic count must be ≥ 1"));
            }
            (1..=k).map(|k| i32::try_from(k).map_err(|_| Error::invalid("harmonic count too large"))).collect()
        };
        let (label, entries) = match *self {
            Self::RotationTrig { harmonics } => {
                let ks = k_range(harmonics)?;
                let sines = ks.iter().map(|&k| named(format!("sin{k}x"), Observable::Sin { harmonic: k, coord: 0 }));
                let cosines = ks.iter().map(|&k| named(format!("cos{k}x"), Observable::Cos { harmonic: k, coord: 0 }));
                (format!("rotation-trig-{harmonics}"), sines.chain(cosines).collect())
            }
            Self::LinearState { dim } => (
                "linear-state".to_string(),
                (0..dim).map(|i| named(format!("x{}", i + 1), Observable::Coordinate { index: i })).collect(),
            ),
            Self::LinearSum { dim } => {
                if dim == 0 {
                    return Err(Error::invalid("linear sum needs dim ≥ 1"));
                }
                ("linear-sum".to_string(), vec![named("sum".into(), Observable::CoordinateSum)])
            }
            Self::RotationSum { harmonics } => {
                let ks = k_range(harmonics)?;
                (
                    format!("rotation-sum-{harmonics}"),
                    vec![named("sinsum".into(), Observable::SinSum { harmonics: ks, coord: 0 })],
                )
            }
            Self::StuartLandauExp { harmonics } => {
                let ks = k_range(harmonics)?;
                (
                    format!("sl-exp-{harmonics}"),
                    ks.iter()
                        .flat_map(|&k| [k, -k])
                        .map(|k| named(format!("f{k}"), Observable::PhaseExp { harmonic: k }))
                        .collect(),
                )
            }
            Self::StuartLandauExpSum { harmonics } => {
                k_range(harmonics)?;
                (
                    format!("sl-exp-sum-{harmonics}"),
                    vec![named("fsum".into(), Observable::PhaseExpSum { max_harmonic: harmonics })],
                )
            }
        };
        ObservableDict::new(label, entries)
    }

    /// Presets yielding one scalar series, meant for delay embedding.
    pub fn is_scalar(&self) -> bool {
        matches!(self, Self::LinearSum { .. } | Self::RotationSum { .. } | Self::StuartLandauExpSum { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    UniformReal { halfwidth: f64 },
    GaussianReal { std: f64 },
    /// Independent real and imaginary parts, each with this standard deviation.
    ComplexGaussian { std_per_component: f64 },
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            Self::None => return Ok(()),
            Self::UniformReal { halfwidth } => halfwidth,
            Self::GaussianReal { std } => std,
            Self::ComplexGaussian { std_per_component } => std_per_component,
        };
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("noise amplitude must be finite and ≥ 0, got {v}")))
        }
    }
}

/// Measurement noise with its own random stream.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
    pub stream: String,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        Self { kind, seed, stream: rng::MEASUREMENT.to_string() }
    }

    pub fn none() -> Self {
        Self::new(NoiseKind::None, 0)
    }
}

/// Evaluates every entry of `dict` along `traj` and adds measurement noise.
///
/// Entry `(i, t)` is `f_i(x_t) + e_{i,t}`. Noise is drawn column by column
/// from the stream named in `noise`, never from the dynamics stream.
pub fn evaluate(dict: &ObservableDict, traj: &Trajectory, noise: &NoiseSpec) -> Result<SeriesMatrix> {
    dict.check_dim(traj.dim())?;
    noise.kind.validate()?;
    let rows = dict.len();
    let mut values = DMatrix::<Complex64>::zeros(rows, traj.len());
    for (t, x) in traj.iter().enumerate() {
        for (i, entry) in dict.entries().iter().enumerate() {
            values[(i, t)] = entry
                .observable
                .eval(x)
                .map_err(|reason| Error::Domain { sample: t, reason: format!("{}: {reason}", entry.name) })?;
        }
    }
    add_noise(&mut values, noise);
    SeriesMatrix::new(values, 0, dict.label())
}

fn add_noise(values: &mut DMatrix<Complex64>, noise: &NoiseSpec) {
    let mut rng = rng::stream(noise.seed, &noise.stream);
    match noise.kind {
        NoiseKind::None => {}
        NoiseKind::UniformReal { halfwidth } if halfwidth > 0.0 => {
            for z in values.iter_mut() {
                z.re += rng.random_range(-halfwidth..=halfwidth);
            }
        }
        NoiseKind::GaussianReal { std } => {
            for z in values.iter_mut() {
                z.re += std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        NoiseKind::ComplexGaussian { std_per_component: s } => {
            for z in values.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z += Complex64::new(s * re, s * im);
            }
        }
        NoiseKind::UniformReal { .. } => {}
    }
}
