//! Per-instance losses. Every loss returns its value and its gradient with
//! respect to the probability row it was given.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::CandidateSet;
use crate::{Error, Result};

pub const DEFAULT_PROB_FLOOR: f64 = 1e-12;

/// Partial-label loss plugged into the first term of the risk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PllLoss {
    /// Confidence-weighted cross-entropy.
    Rc,
    /// `-log` of the candidate mass.
    Cc,
    /// Like `Rc`, with weights recomputed from the current outputs.
    Proden,
    Mae,
    Mse,
    Exp,
}

impl PllLoss {
    pub const ALL: [PllLoss; 6] = [
        PllLoss::Rc,
        PllLoss::Cc,
        PllLoss::Proden,
        PllLoss::Mae,
        PllLoss::Mse,
        PllLoss::Exp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PllLoss::Rc => "rc",
            PllLoss::Cc => "cc",
            PllLoss::Proden => "proden",
            PllLoss::Mae => "mae",
            PllLoss::Mse => "mse",
            PllLoss::Exp => "exp",
        }
    }
}

impl fmt::Display for PllLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PllLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PllLoss::ALL
            .into_iter()
            .find(|l| l.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown loss {s:?}")))
    }
}

/// Bounded losses borrowed from complementary-label learning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Complementary {
    Mae,
    Mse,
    Exp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// Gradient with respect to each probability entry.
    pub grad: Vec<f64>,
}

/// `-log max(p, floor)` and its derivative.
#[inline]
pub(crate) fn neg_log_floored(p: f64, floor: f64) -> (f64, f64) {
    if p > floor {
        (-p.ln(), -1.0 / p)
    } else {
        (-floor.ln(), 0.0)
    }
}

fn check_set(probs: &[f64], s: &CandidateSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if probs.len() < s.universe() {
        return Err(Error::ShapeMismatch(format!(
            "probability row of length {} for {} known classes",
            probs.len(),
            s.universe()
        )));
    }
    Ok(())
}

/// `sum_{j in S} conf_j * -log f_j`.
pub fn pll_loss_rc(probs: &[f64], s: &CandidateSet, conf: &[f64], floor: f64) -> Result<LossValue> {
    check_set(probs, s)?;
    if conf.len() != s.universe() {
        return Err(Error::ShapeMismatch(format!(
            "confidence row of length {} for {} known classes",
            conf.len(),
            s.universe()
        )));
    }
    let mut grad = vec![0.0; probs.len()];
    let mut loss = 0.0;
    for j in s.iter() {
        let (l, g) = neg_log_floored(probs[j], floor);
        loss += conf[j] * l;
        grad[j] = conf[j] * g;
    }
    Ok(LossValue { loss, grad })
}

/// `-log sum_{j in S} f_j`.
pub fn pll_loss_cc(probs: &[f64], s: &CandidateSet, floor: f64) -> Result<LossValue> {
    check_set(probs, s)?;
    let mass: f64 = s.iter().map(|j| probs[j]).sum();
    let (loss, g) = neg_log_floored(mass, floor);
    let mut grad = vec![0.0; probs.len()];
    for j in s.iter() {
        grad[j] = g;
    }
    Ok(LossValue { loss, grad })
}

/// Weighted cross-entropy with weights `f_j / sum_{o in S} f_o`, held constant
/// in the gradient. Returns the loss and the weights over the known classes.
pub fn pll_loss_proden(probs: &[f64], s: &CandidateSet, floor: f64) -> Result<(LossValue, Vec<f64>)> {
    check_set(probs, s)?;
    let mass: f64 = s.iter().map(|j| probs[j]).sum();
    if mass < floor {
        return Err(Error::CandidateMassBelowFloor(mass));
    }
    let mut weights = vec![0.0; s.universe()];
    for j in s.iter() {
        weights[j] = probs[j] / mass;
    }
    let value = pll_loss_rc(probs, s, &weights, floor)?;
    Ok((value, weights))
}

/// MAE / MSE against the uniform target over `S`, or `exp(-sum_{j in S} f_j)`.
pub fn complementary_loss(kind: Complementary, probs: &[f64], s: &CandidateSet) -> Result<LossValue> {
    check_set(probs, s)?;
    let k = s.universe();
    let q = 1.0 / s.len() as f64;
    let target = |j: usize| if s.contains(j) { q } else { 0.0 };
    let mut grad = vec![0.0; probs.len()];
    let loss = match kind {
        Complementary::Mae => {
            let mut loss = 0.0;
            for j in 0..k {
                let diff = probs[j] - target(j);
                loss += diff.abs();
                grad[j] = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
            loss
        }
        Complementary::Mse => {
            let mut loss = 0.0;
            for j in 0..k {
                let diff = probs[j] - target(j);
                loss += diff * diff;
                grad[j] = 2.0 * diff;
            }
            loss
        }
        Complementary::Exp => {
            let mass: f64 = s.iter().map(|j| probs[j]).sum();
            let loss = (-mass).exp();
            for j in s.iter() {
                grad[j] = -loss;
            }
            loss
        }
    };
    Ok(LossValue { loss, grad })
}

/// Cross-entropy against the augmented class, the last entry of `probs`.
pub fn ac_loss(probs: &[f64], floor: f64) -> LossValue {
    let ac = probs.len() - 1;
    let (loss, g) = neg_log_floored(probs[ac], floor);
    let mut grad = vec![0.0; probs.len()];
    grad[ac] = g;
    LossValue { loss, grad }
}

/// Evaluates any [`PllLoss`]; `conf` is only read by `Rc`.
pub fn pll_loss(
    kind: PllLoss,
    probs: &[f64],
    s: &CandidateSet,
    conf: &[f64],
    floor: f64,
) -> Result<LossValue> {
    match kind {
        PllLoss::Rc => pll_loss_rc(probs, s, conf, floor),
        PllLoss::Cc => pll_loss_cc(probs, s, floor),
        PllLoss::Proden => pll_loss_proden(probs, s, floor).map(|(v, _)| v),
        PllLoss::Mae => complementary_loss(Complementary::Mae, probs, s),
        PllLoss::Mse => complementary_loss(Complementary::Mse, probs, s),
        PllLoss::Exp => complementary_loss(Complementary::Exp, probs, s),
    }
}

/// Threshold rule for `k`-way models: the argmax when its probability exceeds
/// `threshold`, otherwise the augmented class `k`.
pub fn baseline_threshold_predict(probs: &[f64], threshold: f64) -> usize {
    let (best, &max) = probs
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, p)| if *p > *acc.1 { (i, p) } else { acc });
    if max > threshold {
        best
    } else {
        probs.len()
    }
}
