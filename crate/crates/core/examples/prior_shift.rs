//! Test-time class-prior shift: the known-class priors are skewed by `alpha`
//! while the augmented share is kept.

use pllac::data::shift_weights;
use pllac::harness::{apply_prior_shift, train_on_split, ExperimentConfig, ThetaMode};
use pllac::seeded_rng;
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    println!("weights at alpha 0.8: {:?}", shift_weights(0.8, 8)?);

    let spec = BlobSpec { known_classes: 8, ..Default::default() }.with_sizes(1600, 2000, 2000);
    let cfg = ExperimentConfig {
        hidden: Some(64),
        lr: 1e-2,
        epochs: 60,
        t: 2,
        theta: ThetaMode::Fixed(0.7),
        ..Default::default()
    };
    for alpha in [0.0, 0.3, 0.5, 0.9] {
        let mut split = spec.split(0)?;
        apply_prior_shift(&mut split, alpha, Some(2000), &mut seeded_rng(1))?;
        let r = train_on_split(&split, &cfg, 0)?;
        println!("alpha {alpha:.1}: accuracy {:.3}", r.report.accuracy);
    }
    Ok(())
}
