//! The pieces of the empirical objective for one batch, with and without the
//! risk penalty.

use ndarray::{Array2, Axis};
use pllac::data::generate_candidate_set;
use pllac::model::{Architecture, ClassifierParams};
use pllac::risk::{empirical_unbiased_risk, risk_penalty, ConfidenceMatrix, PllBatch, RiskConfig};
use pllac::seeded_rng;
use rand::Rng;

fn main() -> pllac::Result<()> {
    let mut rng = seeded_rng(4);
    let (k, d) = (3, 2);
    let x = Array2::from_shape_fn((64, d), |_| rng.random_range(-3.0..3.0));
    let sets = (0..64)
        .map(|_| generate_candidate_set(rng.random_range(0..k), k, &mut rng))
        .collect::<pllac::Result<Vec<_>>>()?;
    let conf = ConfidenceMatrix::uniform(&sets, k);
    let batch = PllBatch { features: x.view(), candidates: &sets, confidence: conf.weights() };
    let params = ClassifierParams::init(Architecture::Linear, d, k + 1, &mut rng)?;

    // unlabeled rows taken where the model already favors ac, so r_pac < 0
    let probs = params.forward(x.view())?;
    let mut idx: Vec<usize> = (0..64).collect();
    idx.sort_by(|&a, &b| probs[[b, k]].total_cmp(&probs[[a, k]]));
    let u = x.select(Axis(0), &idx[..16]);

    for (lambda, t) in [(0.0, 1), (1.0, 1), (2.0, 1), (1.0, 2), (1.0, 3)] {
        let cfg = RiskConfig { theta: 1.0, lambda, t, ..Default::default() };
        let b = empirical_unbiased_risk(&params, &batch, u.view(), &cfg, false)?.breakdown;
        let (_, slope) = risk_penalty(b.r_pac, t);
        println!(
            "lambda {lambda} t {t}: pll {:.4}  r_pac {:+.4}  omega {:.4}  total {:.4}  d total/d r_pac {:+.2}",
            b.pll_term,
            b.r_pac,
            b.omega,
            b.total,
            1.0 + lambda * slope
        );
    }
    Ok(())
}
