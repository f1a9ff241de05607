//! The training loop and single trials.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ThetaMode};
use crate::data::{
    load_csv, make_augmented_split, resample_with_prior_shift, AugmentedSplit, CandidateSet, ShiftConfig,
    SplitOptions,
};
use crate::eval::{argmax_rows, evaluate_predictions, evaluate_probs, EvalReport};
use crate::mixprop::{estimate_theta, fixed_theta, KmeConfig, ThetaEstimate};
use crate::model::{AdamConfig, AdamState, Architecture, ClassifierParams};
use crate::risk::{
    baseline_threshold_predict, empirical_pll_risk, empirical_unbiased_risk, update_confidence,
    ConfidenceMatrix, PllBatch, PllLoss, RiskBreakdown, RiskConfig,
};
use crate::{seeded_rng, Error, Result, Rng};

/// Full-batch numbers logged at the end of every epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based, counted across outer iterations.
    pub epoch: usize,
    #[serde(flatten)]
    pub objective: RiskBreakdown,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    /// `None` for the threshold baseline.
    pub theta_hat: Option<f64>,
    pub epochs: Vec<EpochRecord>,
    pub report: EvalReport,
    pub wall_time_secs: f64,
    /// Epoch whose objective or gradient became non-finite; training stopped there.
    pub diverged_at_epoch: Option<usize>,
    pub removed_fraction: f64,
    #[serde(skip)]
    pub params: Option<ClassifierParams>,
    #[serde(skip)]
    pub theta: Option<ThetaEstimate>,
}

/// State handed to an observer after each epoch's record is computed and
/// before the confidences are refreshed.
pub struct EpochView<'a> {
    pub record: &'a EpochRecord,
    pub params: &'a ClassifierParams,
    /// Confidences used during the epoch.
    pub confidence: &'a ConfidenceMatrix,
}

fn architecture(cfg: &ExperimentConfig) -> Architecture {
    match cfg.hidden {
        Some(hidden) => Architecture::Mlp { hidden },
        None => Architecture::Linear,
    }
}

fn adam_config(cfg: &ExperimentConfig) -> AdamConfig {
    AdamConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..AdamConfig::default()
    }
}

/// Builds the augmented split of `cfg.data` for one trial, applying the
/// class-prior shift when configured.
pub fn prepare_split(cfg: &ExperimentConfig, seed: u64) -> Result<AugmentedSplit> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("`data` is required".into()))?;
    let data = load_csv(path, &cfg.label_column)?;
    let ac_name = cfg
        .ac_class
        .as_ref()
        .ok_or_else(|| Error::Config("`ac_class` is required".into()))?;
    let ac = data
        .class_index(ac_name)
        .ok_or_else(|| Error::Config(format!("ac_class {ac_name:?} not among the labels")))?;
    let opts = SplitOptions {
        ac_class: ac,
        test_fraction: cfg.test_fraction,
        unlabeled_count: cfg.unlabeled_count,
    };
    let mut rng = seeded_rng(seed);
    let mut split = make_augmented_split(&data, &opts, &mut rng)?;
    if let Some(alpha) = cfg.shift_alpha {
        apply_prior_shift(&mut split, alpha, cfg.unlabeled_count, &mut rng)?;
    }
    Ok(split)
}

/// Resamples the test pool with shifted known-class priors and redraws the
/// unlabeled pool from it.
pub fn apply_prior_shift(
    split: &mut AugmentedSplit,
    alpha: f64,
    unlabeled_count: Option<usize>,
    rng: &mut Rng,
) -> Result<()> {
    let shift = ShiftConfig {
        alpha,
        known_class_count: split.k(),
    };
    let (x, y) = resample_with_prior_shift(split.test_features.view(), &split.test_labels, &shift, rng)?;
    split.test_features = x;
    split.test_labels = y;
    let n_u = unlabeled_count.unwrap_or(split.test_labels.len());
    split.resample_unlabeled(n_u, rng);
    Ok(())
}

pub fn estimate_split_theta(split: &AugmentedSplit, cfg: &ExperimentConfig, seed: u64) -> Result<ThetaEstimate> {
    match cfg.theta {
        ThetaMode::Fixed(v) => fixed_theta(v),
        ThetaMode::Kme => estimate_theta(
            split.pll_train.features.view(),
            split.unlabeled.view(),
            &KmeConfig {
                tau: cfg.kme_tau,
                grid_points: cfg.kme_grid,
                seed,
                ..KmeConfig::default()
            },
        ),
    }
}

/// Loads the data, builds the split and trains.
pub fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let split = prepare_split(cfg, seed)?;
    train_on_split(&split, cfg, seed)
}

/// [`run_trial`] with the risk penalty switched off.
pub fn run_unregularized(cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    let cfg = ExperimentConfig {
        lambda: 0.0,
        ..cfg.clone()
    };
    run_trial(&cfg, seed)
}

/// Trains a `(k + 1)`-class model on a prepared split.
pub fn train_on_split(split: &AugmentedSplit, cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    train_on_split_with(split, cfg, seed, |_| {})
}

fn rows_of(candidates: &[CandidateSet], idx: &[usize]) -> Vec<CandidateSet> {
    idx.iter().map(|&i| candidates[i].clone()).collect()
}

fn accuracy_of(probs: ArrayView2<f64>, truth: &[usize]) -> f64 {
    let pred = argmax_rows(probs);
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len().max(1) as f64
}

/// [`train_on_split`] calling `observer` at the end of every epoch.
pub fn train_on_split_with(
    split: &AugmentedSplit,
    cfg: &ExperimentConfig,
    seed: u64,
    mut observer: impl FnMut(&EpochView<'_>),
) -> Result<TrialResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pll = &split.pll_train;
    let k = pll.k;
    if split.unlabeled.nrows() == 0 {
        return Err(Error::InvalidArgument("empty unlabeled pool".into()));
    }
    let theta = estimate_split_theta(split, cfg, seed)?;
    let risk_cfg = RiskConfig {
        theta: theta.theta_hat,
        lambda: cfg.lambda,
        t: cfg.t,
        pll_loss: cfg.pll_loss,
        prob_floor: cfg.prob_floor,
    };
    risk_cfg.validate()?;

    let mut rng = seeded_rng(seed);
    let mut params = ClassifierParams::init(architecture(cfg), pll.d(), k + 1, &mut rng)?;
    let mut adam = AdamState::new(adam_config(cfg), &params);
    let mut confidence = ConfidenceMatrix::uniform(&pll.candidates, k);
    let n = pll.n();
    let n_u = split.unlabeled.nrows();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut records = Vec::new();
    let mut diverged = None;

    'outer: for _ in 0..cfg.iterations {
        for _ in 0..cfg.epochs {
            let epoch = records.len() + 1;
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let x = pll.features.select(Axis(0), chunk);
                let sets = rows_of(&pll.candidates, chunk);
                let conf = confidence.weights().select(Axis(0), chunk);
                let u_idx: Vec<usize> = (0..chunk.len()).map(|_| rng.random_range(0..n_u)).collect();
                let u = split.unlabeled.select(Axis(0), &u_idx);
                let b = PllBatch {
                    features: x.view(),
                    candidates: &sets,
                    confidence: conf.view(),
                };
                let out = empirical_unbiased_risk(&params, &b, u.view(), &risk_cfg, true)?;
                if !out.breakdown.total.is_finite() {
                    diverged = Some(epoch);
                    break 'outer;
                }
                let grad = out.grad.expect("gradient requested");
                match adam.step(&mut params, &grad) {
                    Ok(()) => {}
                    Err(Error::NonFiniteGradient(_)) => {
                        diverged = Some(epoch);
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
                if let Some(w) = out.proden_weights {
                    for (r, &i) in chunk.iter().enumerate() {
                        confidence.set_row(i, w.row(r).as_slice().expect("standard layout"));
                    }
                }
            }

            let full = PllBatch {
                features: pll.features.view(),
                candidates: &pll.candidates,
                confidence: confidence.weights(),
            };
            let objective = empirical_unbiased_risk(&params, &full, split.unlabeled.view(), &risk_cfg, false)?.breakdown;
            if !objective.total.is_finite() {
                diverged = Some(epoch);
                break 'outer;
            }
            let train_probs = params.forward(pll.features.view())?;
            let test_probs = params.forward(split.test_features.view())?;
            let record = EpochRecord {
                epoch,
                objective,
                train_accuracy: accuracy_of(train_probs.view(), &split.pll_truth),
                test_accuracy: accuracy_of(test_probs.view(), &split.test_labels),
            };
            observer(&EpochView {
                record: &record,
                params: &params,
                confidence: &confidence,
            });
            records.push(record);
            if cfg.pll_loss != PllLoss::Proden {
                confidence = update_confidence(train_probs.view(), &pll.candidates, k, cfg.prob_floor)?;
            }
        }
    }

    let probs = params.forward(split.test_features.view())?;
    let report = evaluate_probs(probs.view(), &split.test_labels)?;
    Ok(TrialResult {
        seed,
        theta_hat: Some(theta.theta_hat),
        epochs: records,
        report,
        wall_time_secs: start.elapsed().as_secs_f64(),
        diverged_at_epoch: diverged,
        removed_fraction: split.removed_fraction,
        params: Some(params),
        theta: Some(theta),
    })
}

/// Scores for the threshold baseline: the known-class probabilities plus
/// `1 - max` as the augmented-class score.
pub fn baseline_scores(probs: ArrayView2<f64>) -> Array2<f64> {
    let (m, k) = probs.dim();
    Array2::from_shape_fn((m, k + 1), |(i, j)| {
        if j < k {
            probs[[i, j]]
        } else {
            1.0 - probs.row(i).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
    })
}

/// Evaluates a `k`-output model with the threshold rule.
pub fn evaluate_threshold(
    params: &ClassifierParams,
    features: ArrayView2<f64>,
    truth: &[usize],
    threshold: f64,
) -> Result<EvalReport> {
    let probs = params.forward(features)?;
    let pred: Vec<usize> = probs
        .rows()
        .into_iter()
        .map(|r| baseline_threshold_predict(r.as_slice().expect("standard layout"), threshold))
        .collect();
    let scores = baseline_scores(probs.view());
    evaluate_predictions(&pred, scores.view(), truth, params.output_dim() + 1)
}

/// Trains a `k`-class model on the partially labeled rows only and maps
/// predictions whose top probability does not exceed `cfg.threshold` to the
/// augmented class.
pub fn run_threshold_baseline_on_split(
    split: &AugmentedSplit,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrialResult> {
    cfg.validate()?;
    let start = Instant::now();
    let pll = &split.pll_train;
    let k = pll.k;
    let mut rng = seeded_rng(seed);
    let mut params = ClassifierParams::init(architecture(cfg), pll.d(), k, &mut rng)?;
    let mut adam = AdamState::new(adam_config(cfg), &params);
    let mut confidence = ConfidenceMatrix::uniform(&pll.candidates, k);
    let n = pll.n();
    let batch = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut records = Vec::new();
    let mut diverged = None;

    'outer: for _ in 0..cfg.iterations {
        for _ in 0..cfg.epochs {
            let epoch = records.len() + 1;
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let x = pll.features.select(Axis(0), chunk);
                let sets = rows_of(&pll.candidates, chunk);
                let conf = confidence.weights().select(Axis(0), chunk);
                let b = PllBatch {
                    features: x.view(),
                    candidates: &sets,
                    confidence: conf.view(),
                };
                let out = empirical_pll_risk(&params, &b, cfg.pll_loss, cfg.prob_floor, true)?;
                if !out.breakdown.total.is_finite() {
                    diverged = Some(epoch);
                    break 'outer;
                }
                match adam.step(&mut params, &out.grad.expect("gradient requested")) {
                    Ok(()) => {}
                    Err(Error::NonFiniteGradient(_)) => {
                        diverged = Some(epoch);
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
                if let Some(w) = out.proden_weights {
                    for (r, &i) in chunk.iter().enumerate() {
                        confidence.set_row(i, w.row(r).as_slice().expect("standard layout"));
                    }
                }
            }
            let full = PllBatch {
                features: pll.features.view(),
                candidates: &pll.candidates,
                confidence: confidence.weights(),
            };
            let objective = empirical_pll_risk(&params, &full, cfg.pll_loss, cfg.prob_floor, false)?.breakdown;
            let train_probs = params.forward(pll.features.view())?;
            let test_report = evaluate_threshold(&params, split.test_features.view(), &split.test_labels, cfg.threshold)?;
            records.push(EpochRecord {
                epoch,
                objective,
                train_accuracy: accuracy_of(train_probs.view(), &split.pll_truth),
                test_accuracy: test_report.accuracy,
            });
            if cfg.pll_loss != PllLoss::Proden {
                confidence = update_confidence(train_probs.view(), &pll.candidates, k, cfg.prob_floor)?;
            }
        }
    }

    let report = evaluate_threshold(&params, split.test_features.view(), &split.test_labels, cfg.threshold)?;
    Ok(TrialResult {
        seed,
        theta_hat: None,
        epochs: records,
        report,
        wall_time_secs: start.elapsed().as_secs_f64(),
        diverged_at_epoch: diverged,
        removed_fraction: split.removed_fraction,
        params: Some(params),
        theta: None,
    })
}

/// Loads the data, builds the split and runs the threshold baseline.
pub fn run_threshold_baseline(cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let split = prepare_split(cfg, seed)?;
    run_threshold_baseline_on_split(&split, cfg, seed)
}
