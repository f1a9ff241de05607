//! Partial-label learning with augmented classes.
//!
//! Trains a `(k+1)`-class classifier from partially labeled training data and
//! unlabeled data drawn from the test distribution. The last output class
//! (`ac`) stands for every class that never appears in training. The training
//! objective is an unbiased estimate of the test risk, corrected by a
//! risk-penalty term whenever its augmented-class part turns negative.
//!
//! Modules:
//!
//! * [`data`]: datasets, candidate-set synthesis, augmented splits, prior shift.
//! * [`model`]: linear / one-hidden-layer softmax classifiers and Adam.
//! * [`risk`]: partial-label losses and the empirical unbiased risk.
//! * [`mixprop`]: kernel mean embedding estimate of the mixture proportion.
//! * [`eval`]: predictions, accuracy, macro-F1 and one-vs-rest macro AUC.
//! * [`harness`]: training loop, experiment configs, grids and the CLI plumbing.
//! * [`synth`]: Gaussian-blob generators used by the examples and tests.
//!
//! ```
//! use pllac::synth::BlobSpec;
//! use pllac::harness::{ExperimentConfig, ThetaMode, train_on_split};
//!
//! let split = BlobSpec::default().with_sizes(150, 150, 150).split(7).unwrap();
//! let mut cfg = ExperimentConfig::default();
//! cfg.epochs = 5;
//! cfg.theta = ThetaMode::Fixed(0.7);
//! let result = train_on_split(&split, &cfg, 7).unwrap();
//! assert!(result.report.accuracy > 0.0);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod mixprop;
pub mod model;
pub mod risk;
pub mod synth;

pub use error::{Error, Result};

/// Seeded generator used by every stochastic routine in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
