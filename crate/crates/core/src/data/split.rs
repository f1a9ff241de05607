use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{generate_candidate_set, CandidateSet, LabeledDataset, PartialDataset};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SplitOptions {
    /// Class (index into the input dataset) held out as the augmented class.
    pub ac_class: usize,
    pub test_fraction: f64,
    /// Size of the unlabeled pool; defaults to the size of the final test pool.
    pub unlabeled_count: Option<usize>,
}

impl SplitOptions {
    pub fn new(ac_class: usize) -> Self {
        SplitOptions {
            ac_class,
            test_fraction: 0.2,
            unlabeled_count: None,
        }
    }
}

/// Training, unlabeled and test data for one augmented-class task.
///
/// Known classes are re-indexed densely to `0..k` and the augmented class is
/// index `k`, where `k = pll_train.k`.
#[derive(Clone, Debug)]
pub struct AugmentedSplit {
    pub pll_train: PartialDataset,
    /// Ground truth of the training rows, kept for diagnostics only.
    pub pll_truth: Vec<usize>,
    pub unlabeled: Array2<f64>,
    pub test_features: Array2<f64>,
    pub test_labels: Vec<usize>,
    pub removed_fraction: f64,
    /// Names of the `k + 1` output classes; the last one is the augmented class.
    pub class_names: Vec<String>,
}

impl AugmentedSplit {
    /// Number of known classes; also the index of the augmented class.
    pub fn k(&self) -> usize {
        self.pll_train.k
    }

    pub fn ac_index(&self) -> usize {
        self.pll_train.k
    }

    /// Fraction of test rows drawn from known classes.
    pub fn known_fraction(&self) -> f64 {
        let ac = self.ac_index();
        let known = self.test_labels.iter().filter(|&&l| l != ac).count();
        known as f64 / self.test_labels.len().max(1) as f64
    }

    /// Replaces the unlabeled pool with `count` rows drawn with replacement from the test pool.
    pub fn resample_unlabeled<R: Rng + ?Sized>(&mut self, count: usize, rng: &mut R) {
        self.unlabeled = sample_rows(&self.test_features, count, rng);
    }
}

pub(crate) fn sample_rows<R: Rng + ?Sized>(pool: &Array2<f64>, count: usize, rng: &mut R) -> Array2<f64> {
    let idx: Vec<usize> = (0..count).map(|_| rng.random_range(0..pool.nrows())).collect();
    pool.select(Axis(0), &idx)
}

/// Builds a partial-label task with one augmented class from fully labeled data.
///
/// Rows are split into train/test; training rows receive uniformly generated
/// candidate sets over all original classes, and any training row whose set
/// mentions the augmented class is moved to the test pool. The unlabeled pool
/// is drawn with replacement from the final test pool.
pub fn make_augmented_split<R: Rng + ?Sized>(
    data: &LabeledDataset,
    opts: &SplitOptions,
    rng: &mut R,
) -> Result<AugmentedSplit> {
    let k = data.k;
    let ac = opts.ac_class;
    if ac >= k {
        return Err(Error::InvalidArgument(format!("ac class {ac} outside 0..{k}")));
    }
    if !(opts.test_fraction > 0.0 && opts.test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {} not in (0, 1)",
            opts.test_fraction
        )));
    }
    if !data.labels.contains(&ac) {
        return Err(Error::InvalidArgument(format!("ac class {ac} absent from data")));
    }

    // old class -> new index; known classes keep their relative order, ac goes last
    let known = k - 1;
    let remap: Vec<usize> = (0..k)
        .map(|c| match c.cmp(&ac) {
            std::cmp::Ordering::Less => c,
            std::cmp::Ordering::Equal => known,
            std::cmp::Ordering::Greater => c - 1,
        })
        .collect();

    let mut order: Vec<usize> = (0..data.n()).collect();
    order.shuffle(rng);
    let n_test = ((data.n() as f64) * opts.test_fraction).round() as usize;
    let n_test = n_test.clamp(1, data.n().saturating_sub(1).max(1));
    let (test_rows, train_rows) = order.split_at(n_test);

    let mut kept = Vec::new();
    let mut kept_sets = Vec::new();
    let mut test_pool: Vec<usize> = test_rows.to_vec();
    for &row in train_rows {
        let set = generate_candidate_set(data.labels[row], k, rng)?;
        if set.contains(ac) {
            test_pool.push(row);
            continue;
        }
        let mut mapped = CandidateSet::empty(known);
        for l in set.iter() {
            mapped.insert(remap[l]);
        }
        kept.push(row);
        kept_sets.push(mapped);
    }
    if kept.is_empty() {
        return Err(Error::InvalidArgument("augmented split left no training rows".into()));
    }
    let removed_fraction = (train_rows.len() - kept.len()) as f64 / train_rows.len() as f64;

    let pll_features = data.features.select(Axis(0), &kept);
    let pll_truth = kept.iter().map(|&r| remap[data.labels[r]]).collect();
    let test_features = data.features.select(Axis(0), &test_pool);
    let test_labels = test_pool.iter().map(|&r| remap[data.labels[r]]).collect();
    let n_u = opts.unlabeled_count.unwrap_or(test_pool.len());
    let unlabeled = sample_rows(&test_features, n_u, rng);

    let mut class_names: Vec<String> = (0..k)
        .filter(|&c| c != ac)
        .map(|c| data.class_names[c].clone())
        .collect();
    class_names.push(data.class_names[ac].clone());

    Ok(AugmentedSplit {
        pll_train: PartialDataset::new(pll_features, kept_sets, known)?,
        pll_truth,
        unlabeled,
        test_features,
        test_labels,
        removed_fraction,
        class_names,
    })
}
