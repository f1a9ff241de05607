//! Experiment orchestration: configs, the training loop, repeated trials,
//! sweeps and their JSON-lines logs.

mod config;
mod grid;
mod train;

pub use config::{parse_overrides, parse_pairs, ExperimentConfig, ThetaMode, CONFIG_KEYS};
pub use grid::{
    aggregate, run_grid, run_trials, trial_seed, write_epoch_lines, Aggregate, CellSummary, EpochLine, GridSpec,
    JsonLines, Stat, TrialKind, SWEEP_KEYS,
};
pub use train::{
    apply_prior_shift, baseline_scores, estimate_split_theta, evaluate_threshold, prepare_split,
    run_threshold_baseline, run_threshold_baseline_on_split, run_trial, run_unregularized, train_on_split,
    train_on_split_with, EpochRecord, EpochView, TrialResult,
};
