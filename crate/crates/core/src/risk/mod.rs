//! Losses and the empirical unbiased risk with risk-penalty regularization.
//!
//! For a batch of `n` partially labeled rows and `n_U` unlabeled rows the
//! objective is
//!
//! ```text
//! pll_term          = theta * mean_i l_PLL(f(x_i), S_i)
//! unlabeled_ac_term = mean_u -log f_ac(x_u)
//! negative_ac_term  = theta * mean_i log f_ac(x_i)
//! r_pac             = unlabeled_ac_term + negative_ac_term
//! omega             = (-r_pac)^t  if r_pac < 0, else 0
//! total             = pll_term + r_pac + lambda * omega
//! ```
//!
//! `r_pac` estimates `(1 - theta) E_ac[-log f_ac]`, which is never negative;
//! `omega` penalizes the estimate when finite samples push it below zero.

mod confidence;
mod losses;

pub use confidence::{update_confidence, ConfidenceMatrix};
pub use losses::{
    ac_loss, baseline_threshold_predict, complementary_loss, pll_loss, pll_loss_cc, pll_loss_proden,
    pll_loss_rc, Complementary, LossValue, PllLoss, DEFAULT_PROB_FLOOR,
};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::CandidateSet;
use crate::model::ClassifierParams;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskConfig {
    /// Mixture proportion of known classes in the test distribution.
    pub theta: f64,
    /// Weight of the risk penalty.
    pub lambda: f64,
    /// Exponent of the risk penalty.
    pub t: u32,
    pub pll_loss: PllLoss,
    pub prob_floor: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            theta: 0.5,
            lambda: 1.0,
            t: 1,
            pll_loss: PllLoss::Rc,
            prob_floor: DEFAULT_PROB_FLOOR,
        }
    }
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta {} not in [0, 1]", self.theta)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda {} is negative", self.lambda)));
        }
        if self.t < 1 {
            return Err(Error::InvalidArgument("t must be >= 1".into()));
        }
        if !(self.prob_floor > 0.0) {
            return Err(Error::InvalidArgument("prob_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub pll_term: f64,
    pub unlabeled_ac_term: f64,
    pub negative_ac_term: f64,
    pub r_pac: f64,
    pub omega: f64,
    pub total: f64,
}

/// `Omega(r) = (-r)^t` for negative `r`, else 0, together with `dOmega/dr`.
pub fn risk_penalty(r_pac: f64, t: u32) -> (f64, f64) {
    if r_pac < 0.0 {
        let neg = -r_pac;
        (neg.powi(t as i32), -(t as f64) * neg.powi(t as i32 - 1))
    } else {
        (0.0, 0.0)
    }
}

/// Rows of partially labeled data entering one risk evaluation.
#[derive(Clone, Copy, Debug)]
pub struct PllBatch<'a> {
    pub features: ArrayView2<'a, f64>,
    pub candidates: &'a [CandidateSet],
    /// Read by the RC loss only; one row per instance over the known classes.
    pub confidence: ArrayView2<'a, f64>,
}

#[derive(Clone, Debug)]
pub struct RiskOutput {
    pub breakdown: RiskBreakdown,
    pub grad: Option<ClassifierParams>,
    /// Fresh PRODEN weights for the batch rows (PRODEN only).
    pub proden_weights: Option<Array2<f64>>,
}

/// Evaluates the regularized empirical risk and, if `with_grad`, its exact
/// parameter gradient. The `(k + 1)`-th output of `params` is the augmented class.
pub fn empirical_unbiased_risk(
    params: &ClassifierParams,
    pll: &PllBatch<'_>,
    unlabeled: ArrayView2<f64>,
    cfg: &RiskConfig,
    with_grad: bool,
) -> Result<RiskOutput> {
    cfg.validate()?;
    let n = pll.features.nrows();
    let n_u = unlabeled.nrows();
    if n == 0 || n_u == 0 {
        return Err(Error::InvalidArgument("risk needs non-empty batches".into()));
    }
    if pll.candidates.len() != n || pll.confidence.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows, {} candidate sets, {} confidence rows",
            pll.candidates.len(),
            pll.confidence.nrows()
        )));
    }
    let outputs = params.output_dim();
    let k = outputs - 1;
    if let Some(s) = pll.candidates.iter().find(|s| s.universe() != k) {
        return Err(Error::ShapeMismatch(format!(
            "candidate universe {} but model has {k} known classes",
            s.universe()
        )));
    }
    let floor = cfg.prob_floor;
    let theta = cfg.theta;

    let pll_cache = params.forward_cached(pll.features)?;
    let u_cache = params.forward_cached(unlabeled)?;

    let mut pll_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut pll_up = Array2::zeros((n, outputs));
    let mut neg_up = Array2::zeros((n, outputs));
    let mut proden = (cfg.pll_loss == PllLoss::Proden).then(|| Array2::zeros((n, k)));
    for i in 0..n {
        let probs = pll_cache.probs.row(i);
        let probs = probs.as_slice().expect("standard layout");
        let s = &pll.candidates[i];
        let value = match (&mut proden, cfg.pll_loss) {
            (Some(w), PllLoss::Proden) => {
                let (v, weights) = pll_loss_proden(probs, s, floor)?;
                w.row_mut(i).iter_mut().zip(&weights).for_each(|(d, &x)| *d = x);
                v
            }
            _ => {
                let conf = pll.confidence.row(i).to_vec();
                pll_loss(cfg.pll_loss, probs, s, &conf, floor)?
            }
        };
        pll_sum += value.loss;
        let ac = ac_loss(probs, floor);
        // log f_ac = -ac_loss
        neg_sum -= ac.loss;
        pll_up.row_mut(i).iter_mut().zip(&value.grad).for_each(|(d, &g)| *d = g);
        neg_up[[i, k]] = -ac.grad[k];
    }
    let mut u_sum = 0.0;
    let mut u_up = Array2::zeros((n_u, outputs));
    for u in 0..n_u {
        let probs = u_cache.probs.row(u);
        let ac = ac_loss(probs.as_slice().expect("standard layout"), floor);
        u_sum += ac.loss;
        u_up[[u, k]] = ac.grad[k];
    }

    let pll_term = theta * pll_sum / n as f64;
    let unlabeled_ac_term = u_sum / n_u as f64;
    let negative_ac_term = theta * neg_sum / n as f64;
    let r_pac = unlabeled_ac_term + negative_ac_term;
    let (omega, domega) = risk_penalty(r_pac, cfg.t);
    let total = pll_term + unlabeled_ac_term + negative_ac_term + cfg.lambda * omega;
    let breakdown = RiskBreakdown {
        pll_term,
        unlabeled_ac_term,
        negative_ac_term,
        r_pac,
        omega,
        total,
    };

    let grad = if with_grad {
        // d total / d r_pac
        let pac_scale = 1.0 + cfg.lambda * domega;
        let mut up = pll_up * (theta / n as f64);
        up.scaled_add(pac_scale * theta / n as f64, &neg_up);
        let mut g = params.backward_cached(pll.features, &pll_cache, up.view())?;
        u_up *= pac_scale / n_u as f64;
        let gu = params.backward_cached(unlabeled, &u_cache, u_up.view())?;
        g.add_scaled(&gu, 1.0);
        Some(g)
    } else {
        None
    };
    Ok(RiskOutput {
        breakdown,
        grad,
        proden_weights: proden,
    })
}

/// Mean partial-label loss of a `k`-output model on a batch, without any
/// augmented-class terms. Used by the threshold baseline.
pub fn empirical_pll_risk(
    params: &ClassifierParams,
    pll: &PllBatch<'_>,
    loss: PllLoss,
    floor: f64,
    with_grad: bool,
) -> Result<RiskOutput> {
    let n = pll.features.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("risk needs a non-empty batch".into()));
    }
    if pll.candidates.len() != n || pll.confidence.nrows() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows, {} candidate sets, {} confidence rows",
            pll.candidates.len(),
            pll.confidence.nrows()
        )));
    }
    let k = params.output_dim();
    if let Some(s) = pll.candidates.iter().find(|s| s.universe() != k) {
        return Err(Error::ShapeMismatch(format!(
            "candidate universe {} but model has {k} outputs",
            s.universe()
        )));
    }
    let cache = params.forward_cached(pll.features)?;
    let mut sum = 0.0;
    let mut up = Array2::zeros((n, k));
    let mut proden = (loss == PllLoss::Proden).then(|| Array2::zeros((n, k)));
    for i in 0..n {
        let probs = cache.probs.row(i);
        let probs = probs.as_slice().expect("standard layout");
        let s = &pll.candidates[i];
        let value = match &mut proden {
            Some(w) => {
                let (v, weights) = pll_loss_proden(probs, s, floor)?;
                w.row_mut(i).iter_mut().zip(&weights).for_each(|(d, &x)| *d = x);
                v
            }
            None => pll_loss(loss, probs, s, &pll.confidence.row(i).to_vec(), floor)?,
        };
        sum += value.loss;
        up.row_mut(i).iter_mut().zip(&value.grad).for_each(|(d, &g)| *d = g / n as f64);
    }
    let total = sum / n as f64;
    let grad = if with_grad {
        Some(params.backward_cached(pll.features, &cache, up.view())?)
    } else {
        None
    };
    Ok(RiskOutput {
        breakdown: RiskBreakdown {
            pll_term: total,
            total,
            ..RiskBreakdown::default()
        },
        grad,
        proden_weights: proden,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn set(k: usize, labels: &[usize]) -> CandidateSet {
        CandidateSet::from_labels(k, labels).unwrap()
    }

    #[test]
    fn single_instance_hand_values() {
        let params = ClassifierParams::zeros(Architecture::Linear, 2, 3);
        let x = array![[0.3, -1.0]];
        let cands = [set(2, &[0, 1])];
        let conf = array![[0.5, 0.5]];
        let batch = PllBatch { features: x.view(), candidates: &cands, confidence: conf.view() };
        let cfg = RiskConfig { theta: 1.0, ..RiskConfig::default() };
        let out = empirical_unbiased_risk(&params, &batch, array![[2.0, 2.0]].view(), &cfg, false).unwrap();
        let b = out.breakdown;
        let l3 = 3f64.ln();
        assert_abs_diff_eq!(b.pll_term, l3, epsilon = 1e-12);
        assert_abs_diff_eq!(b.unlabeled_ac_term, l3, epsilon = 1e-12);
        assert_abs_diff_eq!(b.negative_ac_term, -l3, epsilon = 1e-12);
        assert_abs_diff_eq!(b.r_pac, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.total, 1.0986122886681098, epsilon = 1e-12);
    }

    #[test]
    fn theta_zero_collapses_to_unlabeled_term() {
        let mut rng = crate::seeded_rng(3);
        let params = ClassifierParams::init(Architecture::Linear, 2, 4, &mut rng).unwrap();
        let x = array![[0.3, -1.0], [1.0, 2.0]];
        let cands = [set(3, &[0, 1]), set(3, &[2])];
        let conf = ConfidenceMatrix::uniform(&cands, 3);
        let batch = PllBatch { features: x.view(), candidates: &cands, confidence: conf.weights() };
        let cfg = RiskConfig { theta: 0.0, ..RiskConfig::default() };
        let b = empirical_unbiased_risk(&params, &batch, array![[0.0, 1.0]].view(), &cfg, false)
            .unwrap()
            .breakdown;
        assert_eq!(b.total, b.unlabeled_ac_term);
        assert_eq!(b.omega, 0.0);
        assert!(b.unlabeled_ac_term >= 0.0);
    }

    #[test]
    fn theta_out_of_range_is_rejected() {
        let params = ClassifierParams::zeros(Architecture::Linear, 1, 3);
        let x = array![[1.0]];
        let cands = [set(2, &[0])];
        let conf = array![[1.0, 0.0]];
        let batch = PllBatch { features: x.view(), candidates: &cands, confidence: conf.view() };
        let cfg = RiskConfig { theta: 1.5, ..RiskConfig::default() };
        assert!(empirical_unbiased_risk(&params, &batch, x.view(), &cfg, false).is_err());
    }

    #[test]
    fn penalty_shape() {
        for t in 1..=3 {
            assert_eq!(risk_penalty(0.0, t).0, 0.0);
            assert_eq!(risk_penalty(0.7, t).0, 0.0);
            let grid: Vec<f64> = (1..=50).map(|i| -(i as f64) * 0.05).collect();
            let mut prev = 0.0;
            for r in grid {
                let (o, d) = risk_penalty(r, t);
                assert!(o > prev, "not increasing as r_pac drops: t={t}, r={r}");
                assert!(d < 0.0);
                prev = o;
            }
        }
    }
}
