//! Kernel mean embedding estimate of the known-class share of unlabeled data.

use pllac::mixprop::{estimate_theta, KmeConfig};
use pllac::synth::two_gaussians;

fn main() -> pllac::Result<()> {
    for theta in [0.3, 0.5, 0.8] {
        let (pl, unlabeled) = two_gaussians(2000, 2000, theta, 6.0, 2, 7);
        let est = estimate_theta(pl.view(), unlabeled.view(), &KmeConfig::default())?;
        println!("true {theta:.2}  estimate {:.3}  bandwidth {:.3}", est.theta_hat, est.bandwidth);
        if theta == 0.5 {
            let path = std::env::temp_dir().join("pllac_theta_curve.csv");
            est.write_curve_csv(&path)?;
            println!("  distance curve written to {}", path.display());
        }
    }
    Ok(())
}
