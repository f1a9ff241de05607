//! Compares the estimator with a k-way model that rejects low-confidence
//! predictions as the augmented class.

use pllac::harness::{run_threshold_baseline_on_split, train_on_split, ExperimentConfig};
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    // the augmented blob sits between two known ones
    let spec = BlobSpec { radius: 4.0, ac_center: vec![6.5, 0.0], ..Default::default() }.with_sizes(600, 1000, 1000);
    let cfg = ExperimentConfig { lr: 1e-2, ..Default::default() };
    for seed in 0..3 {
        let split = spec.split(seed)?;
        let ac = split.ac_index();
        let ours = train_on_split(&split, &cfg, seed)?;
        let base = run_threshold_baseline_on_split(&split, &cfg, seed)?;
        println!(
            "seed {seed}: accuracy {:.3} vs {:.3}, ac recall {:.3} vs {:.3}",
            ours.report.accuracy,
            base.report.accuracy,
            ours.report.recall(ac).unwrap_or(0.0),
            base.report.recall(ac).unwrap_or(0.0),
        );
    }
    Ok(())
}
