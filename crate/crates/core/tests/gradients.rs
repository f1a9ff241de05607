mod common;

use common::{numeric_gradient, relative_error};
use ndarray::Array2;
use pllac::data::{generate_candidate_set, CandidateSet};
use pllac::model::{Architecture, ClassifierParams};
use pllac::risk::{
    empirical_pll_risk, empirical_unbiased_risk, pll_loss, ConfidenceMatrix, PllBatch, PllLoss, RiskConfig,
    DEFAULT_PROB_FLOOR,
};
use pllac::seeded_rng;
use rand::Rng;

const H: f64 = 1e-6;
const TOL: f64 = 1e-4;

struct Problem {
    x: Array2<f64>,
    u: Array2<f64>,
    sets: Vec<CandidateSet>,
    conf: ConfidenceMatrix,
}

fn problem(k: usize, d: usize, n: usize, n_u: usize, seed: u64) -> Problem {
    let mut rng = seeded_rng(seed);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    // shift the unlabeled rows so the ac column gets varied mass
    let u = Array2::from_shape_fn((n_u, d), |_| rng.random_range(-1.0..3.0));
    let sets: Vec<CandidateSet> = (0..n)
        .map(|_| generate_candidate_set(rng.random_range(0..k), k, &mut rng).unwrap())
        .collect();
    let mut w = Array2::zeros((n, k));
    for (i, s) in sets.iter().enumerate() {
        let raw: Vec<f64> = s.iter().map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (j, r) in s.iter().zip(raw) {
            w[[i, j]] = r / total;
        }
    }
    let conf = ConfidenceMatrix::from_weights(w, &sets).unwrap();
    Problem { x, u, sets, conf }
}

fn arch(i: usize) -> Architecture {
    if i % 2 == 0 {
        Architecture::Linear
    } else {
        Architecture::Mlp { hidden: 7 }
    }
}

#[test]
fn every_pll_loss_through_the_network_matches_finite_differences() {
    let mut checked = 0;
    for (li, &loss) in PllLoss::ALL.iter().enumerate() {
        for a in 0..2 {
            let k = 3 + li % 2;
            let p = problem(k, 4, 6, 1, 10 + li as u64 * 7 + a as u64);
            let params = ClassifierParams::init(arch(a), 4, k + 1, &mut seeded_rng(li as u64 + 100 * a as u64)).unwrap();
            // PRODEN treats its weights as constants, so its reference is RC with frozen weights
            let batch = PllBatch { features: p.x.view(), candidates: &p.sets, confidence: p.conf.weights() };
            let cfg = RiskConfig { theta: 1.0, lambda: 0.0, pll_loss: loss, ..Default::default() };
            let out = empirical_unbiased_risk(&params, &batch, p.u.view(), &cfg, true).unwrap();
            let analytic = out.grad.unwrap();
            // reference: the same per-row loss composed with the forward pass, plus the ac terms
            let frozen = out.proden_weights.clone();
            let numeric = numeric_gradient(&params, H, |q| {
                let probs = q.forward(p.x.view()).unwrap();
                let pu = q.forward(p.u.view()).unwrap();
                let mut pll = 0.0;
                let mut neg = 0.0;
                for i in 0..p.x.nrows() {
                    let row = probs.row(i).to_vec();
                    let v = match (&frozen, loss) {
                        (Some(w), PllLoss::Proden) => {
                            pll_loss(PllLoss::Rc, &row, &p.sets[i], &w.row(i).to_vec(), DEFAULT_PROB_FLOOR).unwrap()
                        }
                        _ => pll_loss(loss, &row, &p.sets[i], &p.conf.row(i).to_vec(), DEFAULT_PROB_FLOOR).unwrap(),
                    };
                    pll += v.loss;
                    neg += row[k].ln();
                }
                let n = p.x.nrows() as f64;
                let un: f64 = pu.column(k).iter().map(|v| -v.ln()).sum::<f64>() / pu.nrows() as f64;
                pll / n + un + neg / n
            });
            let err = relative_error(&analytic.to_flat(), &numeric);
            assert!(err < TOL, "{loss:?} arch {a}: relative error {err}");
            checked += 1;
        }
    }
    assert_eq!(checked, 12);
}

#[test]
fn full_objective_matches_finite_differences_on_both_sides_of_zero() {
    let mut rng = seeded_rng(7);
    let mut negative = 0;
    let mut positive = 0;
    let mut configs = 0;
    for case in 0..36 {
        let loss = PllLoss::ALL[case % PllLoss::ALL.len()];
        let t = 1 + (case % 3) as u32;
        let k = 2 + case % 3;
        let n_u = if case % 4 == 0 { 2 } else { 9 };
        let p = problem(k, 3, 8, n_u, 1000 + case as u64);
        let params = ClassifierParams::init(arch(case / 2), 3, k + 1, &mut rng).unwrap();
        let cfg = RiskConfig {
            theta: rng.random_range(0.3..1.0),
            lambda: [0.0, 0.5, 1.0, 2.0, 3.5][case % 5],
            t,
            pll_loss: if loss == PllLoss::Proden { PllLoss::Rc } else { loss },
            prob_floor: DEFAULT_PROB_FLOOR,
        };
        let batch = PllBatch { features: p.x.view(), candidates: &p.sets, confidence: p.conf.weights() };
        let out = empirical_unbiased_risk(&params, &batch, p.u.view(), &cfg, true).unwrap();
        let r = out.breakdown.r_pac;
        if r.abs() < 1e-3 {
            continue;
        }
        if r < 0.0 {
            negative += 1;
        } else {
            positive += 1;
        }
        let numeric = numeric_gradient(&params, H, |q| {
            empirical_unbiased_risk(q, &batch, p.u.view(), &cfg, false).unwrap().breakdown.total
        });
        let err = relative_error(&out.grad.unwrap().to_flat(), &numeric);
        assert!(err < TOL, "case {case} ({cfg:?}, r_pac {r}): relative error {err}");
        configs += 1;
    }
    assert!(configs >= 20, "only {configs} configurations checked");
    assert!(negative >= 3 && positive >= 3, "{negative} negative, {positive} positive r_pac");
}

#[test]
fn pll_only_risk_matches_finite_differences() {
    for (case, &loss) in [PllLoss::Rc, PllLoss::Cc, PllLoss::Mae, PllLoss::Mse, PllLoss::Exp].iter().enumerate() {
        let k = 4;
        let p = problem(k, 3, 10, 1, 500 + case as u64);
        let params = ClassifierParams::init(arch(case), 3, k, &mut seeded_rng(case as u64)).unwrap();
        let batch = PllBatch { features: p.x.view(), candidates: &p.sets, confidence: p.conf.weights() };
        let out = empirical_pll_risk(&params, &batch, loss, DEFAULT_PROB_FLOOR, true).unwrap();
        let numeric = numeric_gradient(&params, H, |q| {
            empirical_pll_risk(q, &batch, loss, DEFAULT_PROB_FLOOR, false).unwrap().breakdown.total
        });
        let err = relative_error(&out.grad.unwrap().to_flat(), &numeric);
        assert!(err < TOL, "{loss:?}: relative error {err}");
    }
}
