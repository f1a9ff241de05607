//! Saves a trained model, reloads it and evaluates it on fresh data.

use pllac::eval::evaluate_model;
use pllac::harness::{train_on_split, ExperimentConfig};
use pllac::model::{load_checkpoint, save_checkpoint};
use pllac::seeded_rng;
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    let spec = BlobSpec::default().with_sizes(800, 500, 800);
    let cfg = ExperimentConfig { lr: 1e-2, epochs: 40, ..Default::default() };
    let result = train_on_split(&spec.split(3)?, &cfg, 3)?;
    let params = result.params.expect("trained parameters");

    let path = std::env::temp_dir().join("pllac_example.ckpt");
    save_checkpoint(&path, &params)?;
    let restored = load_checkpoint(&path)?;
    assert_eq!(restored.to_flat(), params.to_flat());

    let (x, y) = spec.sample_test(2000, &mut seeded_rng(99));
    let report = evaluate_model(&restored, x.view(), &y)?;
    println!("checkpoint {}", path.display());
    println!("accuracy {:.3}  macro-F1 {:.3}  macro-AUC {:.3}", report.accuracy, report.macro_f1, report.macro_auc);
    for (c, row) in report.confusion.iter().enumerate() {
        println!("  {c}: {row:?}");
    }
    Ok(())
}
