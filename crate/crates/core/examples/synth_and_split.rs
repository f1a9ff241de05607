//! Builds an augmented-class task from fully labeled data.

use pllac::data::{make_augmented_split, SplitOptions};
use pllac::seeded_rng;
use pllac::synth::BlobSpec;

fn main() -> pllac::Result<()> {
    // five known blobs plus one more that will play the augmented class
    let spec = BlobSpec { known_classes: 5, ..Default::default() };
    let data = spec.labeled(3000, 0)?;
    let ac = data.k - 1;

    let opts = SplitOptions { unlabeled_count: Some(800), ..SplitOptions::new(ac) };
    let split = make_augmented_split(&data, &opts, &mut seeded_rng(1))?;

    println!("known classes: {}", split.k());
    println!("training rows: {}", split.pll_train.n());
    println!("moved to test: {:.1}%", 100.0 * split.removed_fraction);
    println!("test rows: {} ({:.1}% known)", split.test_labels.len(), 100.0 * split.known_fraction());
    println!("unlabeled rows: {}", split.unlabeled.nrows());

    let mean_size = split.pll_train.candidates.iter().map(|s| s.len()).sum::<usize>() as f64
        / split.pll_train.n() as f64;
    println!("mean candidate set size: {mean_size:.2}");
    for (s, y) in split.pll_train.candidates.iter().zip(&split.pll_truth).take(5) {
        println!("  truth {y}  candidates {:?}", s.labels());
    }
    Ok(())
}
