mod common;

use common::{admissible_sets, DiscreteDomain};
use ndarray::{Array2, Axis};
use pllac::data::{generate_candidate_set, CandidateSet};
use pllac::model::{Architecture, ClassifierParams};
use pllac::risk::{empirical_unbiased_risk, ConfidenceMatrix, PllBatch, PllLoss, RiskConfig};
use pllac::seeded_rng;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

const THETA: f64 = 0.7;
const K: usize = 3;

/// Population risk with no penalty: theta * E_PL[l] + (1 - theta) * E_ac[-log f_ac].
fn exact_risk(dom: &DiscreteDomain, probs: &Array2<f64>, loss: PllLoss) -> f64 {
    let mut pll = 0.0;
    for a in 0..dom.atoms.nrows() {
        let f = probs.row(a);
        for y in 0..K {
            let sets = admissible_sets(y, K);
            let mean_loss: f64 = sets
                .iter()
                .map(|s| match loss {
                    PllLoss::Rc => s.iter().map(|&j| -f[j].ln()).sum::<f64>() / s.len() as f64,
                    PllLoss::Cc => -s.iter().map(|&j| f[j]).sum::<f64>().ln(),
                    _ => unreachable!(),
                })
                .sum::<f64>()
                / sets.len() as f64;
            pll += dom.joint[[a, y]] * mean_loss;
        }
    }
    let ac: f64 = (0..dom.atoms.nrows()).map(|a| dom.ac[a] * -probs[[a, K]].ln()).sum();
    THETA * pll + (1.0 - THETA) * ac
}

#[test]
fn empirical_risk_is_unbiased_on_a_discrete_domain() {
    let mut rng = seeded_rng(2024);
    let dom = DiscreteDomain::random(10, 3, K, &mut rng);
    let params = ClassifierParams::init(Architecture::Linear, 3, K + 1, &mut rng).unwrap();
    let probs = params.forward(dom.atoms.view()).unwrap();

    let flat: Vec<f64> = dom.joint.iter().copied().collect();
    let pl_law = WeightedIndex::new(&flat).unwrap();
    let test_mass: Vec<f64> = (0..dom.atoms.nrows())
        .map(|a| THETA * dom.joint.row(a).sum() + (1.0 - THETA) * dom.ac[a])
        .collect();
    let u_law = WeightedIndex::new(&test_mass).unwrap();

    for loss in [PllLoss::Rc, PllLoss::Cc] {
        let exact = exact_risk(&dom, &probs, loss);
        let cfg = RiskConfig { theta: THETA, lambda: 0.0, t: 1, pll_loss: loss, ..Default::default() };
        let reps = 200;
        let (n, n_u) = (100, 100);
        let mut totals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut rows = Vec::with_capacity(n);
            let mut sets: Vec<CandidateSet> = Vec::with_capacity(n);
            for _ in 0..n {
                let cell = pl_law.sample(&mut rng);
                let (a, y) = (cell / K, cell % K);
                rows.push(a);
                sets.push(generate_candidate_set(y, K, &mut rng).unwrap());
            }
            let u_rows: Vec<usize> = (0..n_u).map(|_| u_law.sample(&mut rng)).collect();
            let x = dom.atoms.select(Axis(0), &rows);
            let u = dom.atoms.select(Axis(0), &u_rows);
            let conf = ConfidenceMatrix::uniform(&sets, K);
            let batch = PllBatch { features: x.view(), candidates: &sets, confidence: conf.weights() };
            let out = empirical_unbiased_risk(&params, &batch, u.view(), &cfg, false).unwrap();
            totals.push(out.breakdown.total);
        }
        let mean = totals.iter().sum::<f64>() / reps as f64;
        let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!(
            (mean - exact).abs() < 3.0 * se,
            "{loss:?}: Monte Carlo mean {mean} vs exact {exact} (se {se})"
        );
    }
}
