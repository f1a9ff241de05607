//! Repeated trials, sweeps and their aggregation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{parse_pairs, ExperimentConfig, ThetaMode};
use super::train::{run_threshold_baseline, run_trial, run_unregularized, EpochRecord, TrialResult};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialKind {
    Pllac,
    Unregularized,
    Baseline,
}

impl TrialKind {
    pub fn run(self, cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
        match self {
            TrialKind::Pllac => run_trial(cfg, seed),
            TrialKind::Unregularized => run_unregularized(cfg, seed),
            TrialKind::Baseline => run_threshold_baseline(cfg, seed),
        }
    }
}

/// Seed of trial `i`.
pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    cfg.seed.wrapping_add(trial as u64)
}

/// Runs `cfg.trials` independent trials; results come back in trial order.
pub fn run_trials(cfg: &ExperimentConfig, kind: TrialKind) -> Vec<Result<TrialResult>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| kind.run(cfg, trial_seed(cfg, i)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for a single value.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials_ok: usize,
    pub accuracy: Option<Stat>,
    pub macro_f1: Option<Stat>,
    pub macro_auc: Option<Stat>,
    pub theta_hat: Option<Stat>,
    pub failures: Vec<String>,
}

pub fn aggregate(results: &[Result<TrialResult>]) -> Aggregate {
    let ok: Vec<&TrialResult> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let pick = |f: fn(&TrialResult) -> f64| Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    let thetas: Vec<f64> = ok.iter().filter_map(|r| r.theta_hat).collect();
    Aggregate {
        trials_ok: ok.len(),
        accuracy: pick(|r| r.report.accuracy),
        macro_f1: pick(|r| r.report.macro_f1),
        macro_auc: pick(|r| r.report.macro_auc),
        theta_hat: Stat::of(&thetas),
        failures: results
            .iter()
            .filter_map(|r| r.as_ref().err().map(|e| e.to_string()))
            .collect(),
    }
}

/// Sweep axes over a base config; every axis holds at least one value.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub base: ExperimentConfig,
    pub lambda: Vec<f64>,
    pub t: Vec<u32>,
    pub theta: Vec<ThetaMode>,
    pub unlabeled_count: Vec<Option<usize>>,
    pub shift_alpha: Vec<Option<f64>>,
}

pub const SWEEP_KEYS: &[&str] = &["lambda", "t", "theta", "unlabeled_count", "shift_alpha"];

impl GridSpec {
    pub fn single(base: ExperimentConfig) -> Self {
        GridSpec {
            lambda: vec![base.lambda],
            t: vec![base.t],
            theta: vec![base.theta],
            unlabeled_count: vec![base.unlabeled_count],
            shift_alpha: vec![base.shift_alpha],
            base,
        }
    }

    /// Sets a key; sweep keys take comma-separated lists.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--").replace('-', "_");
        if !SWEEP_KEYS.contains(&key.as_str()) {
            return self.base.set(&key, value);
        }
        let mut probe = self.base.clone();
        let mut configs = Vec::new();
        for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            probe.set(&key, item)?;
            configs.push(probe.clone());
        }
        if configs.is_empty() {
            return Err(Error::Config(format!("empty sweep for `{key}`")));
        }
        match key.as_str() {
            "lambda" => self.lambda = configs.iter().map(|c| c.lambda).collect(),
            "t" => self.t = configs.iter().map(|c| c.t).collect(),
            "theta" => self.theta = configs.iter().map(|c| c.theta).collect(),
            "unlabeled_count" => self.unlabeled_count = configs.iter().map(|c| c.unlabeled_count).collect(),
            _ => self.shift_alpha = configs.iter().map(|c| c.shift_alpha).collect(),
        }
        Ok(())
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut spec = GridSpec::single(ExperimentConfig::default());
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            for (k, v, line) in parse_pairs(&text)? {
                spec.set(&k, &v)
                    .map_err(|e| Error::Config(format!("line {line}: {e}")))?;
            }
        }
        for (k, v) in overrides {
            spec.set(k, v)?;
        }
        spec.base.validate()?;
        for cell in spec.cells() {
            cell.validate()?;
        }
        Ok(spec)
    }

    /// Cross product of the axes, `lambda` varying slowest.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &lambda in &self.lambda {
            for &t in &self.t {
                for &theta in &self.theta {
                    for &unlabeled_count in &self.unlabeled_count {
                        for &shift_alpha in &self.shift_alpha {
                            out.push(ExperimentConfig {
                                lambda,
                                t,
                                theta,
                                unlabeled_count,
                                shift_alpha,
                                ..self.base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// One summary row per grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub kind: TrialKind,
    pub lambda: f64,
    pub t: u32,
    pub theta: String,
    pub unlabeled_count: Option<usize>,
    pub shift_alpha: Option<f64>,
    #[serde(flatten)]
    pub aggregate: Aggregate,
}

/// One line of the per-epoch curve log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLine {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub record: EpochRecord,
}

/// Runs every cell; a failing trial is recorded in its cell's summary and
/// the sweep continues. `on_cell` sees each cell's trials as soon as they finish.
pub fn run_grid(
    spec: &GridSpec,
    kind: TrialKind,
    mut on_cell: impl FnMut(&CellSummary, &[Result<TrialResult>]) -> Result<()>,
) -> Result<Vec<CellSummary>> {
    let mut out = Vec::new();
    for (i, cfg) in spec.cells().iter().enumerate() {
        let results = run_trials(cfg, kind);
        let summary = CellSummary {
            cell: i,
            kind,
            lambda: cfg.lambda,
            t: cfg.t,
            theta: cfg.theta.to_string(),
            unlabeled_count: cfg.unlabeled_count,
            shift_alpha: cfg.shift_alpha,
            aggregate: aggregate(&results),
        };
        on_cell(&summary, &results)?;
        out.push(summary);
    }
    Ok(out)
}

/// Append-only JSON-lines file.
pub struct JsonLines {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonLines {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::options()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(JsonLines {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        writeln!(self.out).map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Writes every epoch record of `results` as [`EpochLine`]s.
pub fn write_epoch_lines(out: &mut JsonLines, cell: usize, results: &[Result<TrialResult>]) -> Result<()> {
    for (trial, r) in results.iter().enumerate() {
        if let Ok(r) = r {
            for record in &r.epochs {
                out.write(&EpochLine {
                    cell,
                    trial,
                    seed: r.seed,
                    record: record.clone(),
                })?;
            }
        }
    }
    out.flush()
}
