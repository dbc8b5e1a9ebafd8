//! Experiment configs, runs over realizations and spectrum comparison.

mod experiment;
mod matching;
mod presets;
mod report;

pub use experiment::{
    convergence_sweep, data_matrices, run_experiment, run_experiment_with, run_realization, DualConfig,
    ExperimentConfig, RealizationOutcome, SweepPoint,
};
pub use matching::{match_spectra, MatchedPair, SpectrumComparison};
pub use presets::{list_presets, preset, preset_names, resolve_config};
pub use report::{Aggregate, RealizationReport, RunReport};
