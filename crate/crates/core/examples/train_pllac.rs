//! Trains the risk-penalized estimator on a synthetic task and prints the
//! per-epoch objective.

use pllac::harness::{train_on_split_with, ExperimentConfig};
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    let split = BlobSpec::default().with_sizes(1000, 1000, 1000).split(0)?;
    let cfg = ExperimentConfig {
        lr: 1e-2,
        epochs: 60,
        hidden: Some(32),
        ..Default::default()
    };
    let result = train_on_split_with(&split, &cfg, 0, |view| {
        let r = view.record;
        if r.epoch % 10 == 0 {
            println!(
                "epoch {:3}  total {:.4}  r_pac {:+.4}  train {:.3}  test {:.3}",
                r.epoch, r.objective.total, r.objective.r_pac, r.train_accuracy, r.test_accuracy
            );
        }
    })?;
    let report = &result.report;
    println!("theta_hat {:.3}", result.theta_hat.unwrap_or(f64::NAN));
    println!("accuracy {:.3}  macro-F1 {:.3}  macro-AUC {:.3}", report.accuracy, report.macro_f1, report.macro_auc);
    println!("augmented-class recall {:.3}", report.recall(split.ac_index()).unwrap_or(f64::NAN));
    Ok(())
}
