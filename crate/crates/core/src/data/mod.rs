//! Datasets, candidate-set synthesis and the augmented-class protocol.

mod candidates;
mod dataset;
mod shift;
mod split;

pub use candidates::{generate_candidate_set, CandidateSet};
pub use dataset::{
    load_csv, read_candidates, read_features_csv, read_partial, write_candidates,
    write_features_csv, write_labeled_csv, write_partial, LabeledDataset, PartialDataset,
};
pub use shift::{resample_with_prior_shift, shift_weights, ShiftConfig};
pub use split::{make_augmented_split, AugmentedSplit, SplitOptions};
