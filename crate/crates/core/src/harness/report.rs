use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentConfig, RealizationOutcome};
use super::matching::SpectrumComparison;
use crate::dmd::Algorithm;
use crate::error::Result;
use crate::rds_sim::TimeScale;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationReport {
    pub index: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub rank: usize,
    /// Discrete eigenvalues as returned by the decomposition.
    pub eigenvalues: Vec<Complex64>,
    /// Present when the truth is a generator spectrum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<Vec<Complex64>>,
    pub singular_values: Vec<f64>,
    pub eigvec_condition: f64,
    pub comparison: SpectrumComparison,
}

impl RealizationReport {
    pub fn from_outcome(o: &RealizationOutcome) -> Self {
        let continuous = match o.time_scale {
            TimeScale::ContinuousRate => Some(o.estimates.clone()),
            TimeScale::DiscreteUnitStep => None,
        };
        Self {
            index: o.index,
            seed: o.seed,
            algorithm: o.result.algorithm,
            rank: o.result.rank(),
            eigenvalues: o.result.eigenvalues.clone(),
            continuous,
            singular_values: o.result.singular_values.clone(),
            eigvec_condition: o.result.eigvec_condition,
            comparison: o.comparison.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Mean over realizations of each realization's mean matched error.
    pub mean_of_mean_errors: f64,
    pub worst_max_error: f64,
}

impl Aggregate {
    pub fn from_reports(reports: &[RealizationReport]) -> Self {
        let n = reports.len().max(1) as f64;
        Self {
            mean_of_mean_errors: reports.iter().map(|r| r.comparison.mean_error).sum::<f64>() / n,
            worst_max_error: reports.iter().map(|r| r.comparison.max_error).fold(0.0, f64::max),
        }
    }
}

/// Everything produced by one experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    /// SHA-256 of the config's JSON form.
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub time_scale: TimeScale,
    pub truth: Vec<Complex64>,
    pub validity_note: String,
    pub realizations: Vec<RealizationReport>,
    pub aggregate: Aggregate,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn recompute_aggregate(&mut self) {
        self.aggregate = Aggregate::from_reports(&self.realizations);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Matched pairs of every realization, one per line.
    pub fn pairs_csv(&self) -> String {
        let mut out = String::from("realization,true_re,true_im,est_re,est_im,error\n");
        for r in &self.realizations {
            for p in &r.comparison.pairs {
                writeln!(
                    out,
                    "{},{:e},{:e},{:e},{:e},{:e}",
                    r.index, p.truth.re, p.truth.im, p.estimate.re, p.estimate.im, p.error
                )
                .expect("writing to a String");
            }
        }
        out
    }

    /// Writes `report.json` and `pairs.csv` into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(dir.join("pairs.csv"), self.pairs_csv())?;
        Ok(())
    }
}
