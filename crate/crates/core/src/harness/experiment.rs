use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::matching::{match_spectra, SpectrumComparison};
use super::report::{Aggregate, RealizationReport, RunReport};
use crate::dmd::{self, Algorithm, DmdOptions, DmdResult};
use crate::error::{Error, Result};
use crate::observables::{
    align, build_dual, evaluate, hankel_embed, snapshot_pair, DictionaryPreset, DualTransform, EmbeddingPlan,
    NoiseKind, NoiseSpec, SeriesMatrix,
};
use crate::rds_sim::{simulate, simulate_from, true_spectrum, ModeSelection, SystemSpec, TimeScale, TrueSpectrum};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualConfig {
    /// Samples into the past; 1 is the smallest shift independent of i.i.d. noise.
    pub shift: usize,
    #[serde(default)]
    pub augment: Vec<DualTransform>,
    #[serde(default)]
    pub extra_shifts: usize,
}

/// Declarative description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub system: SystemSpec,
    pub n_samples: usize,
    /// Defaults to the system's own burn-in.
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    pub dictionary: DictionaryPreset,
    #[serde(default)]
    pub noise: NoiseKind,
    /// Delay embedding of a scalar dictionary.
    #[serde(default)]
    pub embedding: Option<EmbeddingPlan>,
    /// Dual observable for Alg 3/4. Without it (and without an embedding)
    /// the dual is X itself.
    #[serde(default)]
    pub dual: Option<DualConfig>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub options: DmdOptions,
    pub truth: ModeSelection,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_realizations() -> usize {
    5
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::invalid("realizations must be ≥ 1"));
        }
        if self.n_samples < 2 {
            return Err(Error::invalid("n_samples must be ≥ 2"));
        }
        self.system.validate()?;
        self.noise.validate()?;
        self.options.validate()?;
        self.dictionary.build()?.check_dim(self.system.state_dim())?;
        if self.embedding.is_some() != self.dictionary.is_scalar() {
            return Err(Error::invalid(if self.embedding.is_some() {
                "a delay embedding needs a scalar dictionary (linear_sum, rotation_sum, stuart_landau_exp_sum)"
            } else {
                "a scalar dictionary needs a delay embedding"
            }));
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != self.system.state_dim() {
                return Err(Error::invalid(format!(
                    "initial_state has {} entries, system has dimension {}",
                    x0.len(),
                    self.system.state_dim()
                )));
            }
        }
        true_spectrum(&self.system, &self.truth)?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or_else(|| self.system.default_burn_in())
    }
}

/// Full output of one realization, including the DMD matrices.
#[derive(Clone, Debug)]
pub struct RealizationOutcome {
    pub index: usize,
    pub seed: u64,
    pub result: DmdResult,
    /// Estimates on the truth's time scale.
    pub estimates: Vec<Complex64>,
    pub time_scale: TimeScale,
    pub comparison: SpectrumComparison,
}

/// Builds the data matrices `(X, Y, Z)` of one realization.
pub fn data_matrices(
    cfg: &ExperimentConfig,
    realization: usize,
) -> Result<(SeriesMatrix, SeriesMatrix, Option<SeriesMatrix>)> {
    let seed = rng::realization_seed(cfg.base_seed, realization);
    let traj = match &cfg.initial_state {
        Some(x0) => simulate_from(&cfg.system, x0, cfg.n_samples, seed, cfg.burn_in())?,
        None => simulate(&cfg.system, cfg.n_samples, seed, cfg.burn_in())?,
    };
    let dict = cfg.dictionary.build()?;
    let series = evaluate(&dict, &traj, &NoiseSpec::new(cfg.noise.clone(), seed))?;
    drop(traj);
    let dual_of = |d: &DualConfig| build_dual(&series, d.shift, &d.augment, d.extra_shifts);
    let uses_dual = cfg.algorithm.uses_dual();
    Ok(match (&cfg.embedding, &cfg.dual) {
        (Some(plan), Some(d)) if uses_dual => {
            let plain = EmbeddingPlan { delays: plan.delays, dual_shift: 0 };
            let (x, y, _) = hankel_embed(&series, &plain)?;
            let z = dual_of(d)?;
            let mut v = align(&[&x, &y, &z])?.into_iter();
            (v.next().unwrap(), v.next().unwrap(), v.next())
        }
        (Some(plan), _) => {
            let (x, y, z) = hankel_embed(&series, plan)?;
            (x, y, Some(z))
        }
        (None, Some(d)) if uses_dual => {
            let (x, y) = snapshot_pair(&series)?;
            let z = dual_of(d)?;
            let mut v = align(&[&x, &y, &z])?.into_iter();
            (v.next().unwrap(), v.next().unwrap(), v.next())
        }
        (None, _) => {
            let (x, y) = snapshot_pair(&series)?;
            let z = x.clone();
            (x, y, Some(z))
        }
    })
}

fn truth_of(cfg: &ExperimentConfig) -> Result<TrueSpectrum> {
    true_spectrum(&cfg.system, &cfg.truth)
}

/// Runs the pipeline for realization `index`.
pub fn run_realization(cfg: &ExperimentConfig, index: usize) -> Result<RealizationOutcome> {
    let inner = || -> Result<RealizationOutcome> {
        let truth = truth_of(cfg)?;
        let (x, y, z) = data_matrices(cfg, index)?;
        let result = dmd::run(cfg.algorithm, &x, &y, z.as_ref(), &cfg.options)?;
        drop((x, y, z));
        let estimates = match truth.time_scale {
            TimeScale::DiscreteUnitStep => result.eigenvalues.clone(),
            TimeScale::ContinuousRate => {
                result.continuous_spectrum(cfg.system.dt())?.into_iter().map(|c| c.value).collect()
            }
        };
        let comparison = match_spectra(&truth.eigenvalues, &estimates)?;
        Ok(RealizationOutcome {
            index,
            seed: rng::realization_seed(cfg.base_seed, index),
            result,
            estimates,
            time_scale: truth.time_scale,
            comparison,
        })
    };
    inner().map_err(|e| Error::Realization { realization: index, source: Box::new(e) })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    run_experiment_with(cfg, 1)
}

/// Runs every realization on up to `jobs` threads. The report does not
/// depend on `jobs`.
pub fn run_experiment_with(cfg: &ExperimentConfig, jobs: usize) -> Result<RunReport> {
    cfg.validate()?;
    let started = Instant::now();
    let truth = truth_of(cfg)?;
    let slots: Mutex<Vec<Option<Result<RealizationReport>>>> =
        Mutex::new((0..cfg.realizations).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, cfg.realizations);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let r = next.fetch_add(1, Ordering::Relaxed);
                if r >= cfg.realizations {
                    break;
                }
                let out = run_realization(cfg, r).map(|o| RealizationReport::from_outcome(&o));
                slots.lock().expect("no worker panics while holding the lock")[r] = Some(out);
            });
        }
    });
    let realizations = slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|slot| slot.expect("every realization ran"))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = Aggregate::from_reports(&realizations);
    Ok(RunReport {
        name: cfg.name.clone(),
        config_digest: cfg.digest(),
        config: cfg.clone(),
        time_scale: truth.time_scale,
        truth: truth.eigenvalues,
        validity_note: truth.validity_note,
        realizations,
        aggregate,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_samples: usize,
    pub mean_error: f64,
}

/// Aggregate error of `cfg` at each sample count, all with `cfg`'s base seed.
pub fn convergence_sweep(cfg: &ExperimentConfig, sample_counts: &[usize]) -> Result<Vec<SweepPoint>> {
    if sample_counts.is_empty() {
        return Err(Error::invalid("no sample counts given"));
    }
    if sample_counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sample counts must be strictly ascending"));
    }
    sample_counts
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.n_samples = n;
            let report = run_experiment(&c)?;
            Ok(SweepPoint { n_samples: n, mean_error: report.aggregate.mean_of_mean_errors })
        })
        .collect()
}
