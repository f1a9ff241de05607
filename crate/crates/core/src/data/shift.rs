use ndarray::{Array2, ArrayView2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::{Error, Result};

/// Class-prior shift applied to a test set.
#[derive(Clone, Copy, Debug)]
pub struct ShiftConfig {
    /// Shift intensity in `[0, 1)`.
    pub alpha: f64,
    pub known_class_count: usize,
}

/// Relative prior weights of the known classes.
///
/// For an even class count the weights are `1 -/+ alpha * i / (K/2)`,
/// `i = 1..=K/2`, so eight classes give
/// `{1-a, 1-3a/4, 1-a/2, 1-a/4, 1+a/4, 1+a/2, 1+3a/4, 1+a}`. Odd counts
/// interpolate linearly from `1 - alpha` to `1 + alpha`.
pub fn shift_weights(alpha: f64, known_class_count: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("shift alpha {alpha} not in [0, 1)")));
    }
    let kk = known_class_count;
    if kk == 0 {
        return Err(Error::InvalidArgument("no known classes".into()));
    }
    if kk == 1 {
        return Ok(vec![1.0]);
    }
    let w = if kk % 2 == 0 {
        let half = kk / 2;
        let lower = (0..half).map(|i| 1.0 - alpha * (half - i) as f64 / half as f64);
        let upper = (1..=half).map(|i| 1.0 + alpha * i as f64 / half as f64);
        lower.chain(upper).collect()
    } else {
        let half = (kk - 1) / 2;
        (0..kk)
            .map(|i| 1.0 + alpha * (i as f64 - half as f64) / half as f64)
            .collect()
    };
    Ok(w)
}

/// Resamples a test set (with replacement, size preserved) so that the known
/// classes' share of the known-class mass follows [`shift_weights`]; the
/// augmented class (label `known_class_count`) keeps its original share.
pub fn resample_with_prior_shift<R: Rng + ?Sized>(
    features: ArrayView2<f64>,
    labels: &[usize],
    cfg: &ShiftConfig,
    rng: &mut R,
) -> Result<(Array2<f64>, Vec<usize>)> {
    if features.nrows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let kk = cfg.known_class_count;
    let weights = shift_weights(cfg.alpha, kk)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); kk + 1];
    for (i, &l) in labels.iter().enumerate() {
        if l > kk {
            return Err(Error::InvalidArgument(format!("label {l} outside 0..={kk}")));
        }
        by_class[l].push(i);
    }
    let m = labels.len();
    let ac_share = by_class[kk].len() as f64 / m as f64;
    let known_share = 1.0 - ac_share;
    let wsum: f64 = weights.iter().sum();
    let mut class_probs: Vec<f64> = weights.iter().map(|w| known_share * w / wsum).collect();
    class_probs.push(ac_share);
    for (c, &p) in class_probs.iter().enumerate() {
        if p > 0.0 && by_class[c].is_empty() {
            return Err(Error::EmptyClass(c));
        }
    }
    let dist = WeightedIndex::new(&class_probs)
        .map_err(|e| Error::InvalidArgument(format!("class weights: {e}")))?;
    let mut rows = Vec::with_capacity(m);
    let mut out_labels = Vec::with_capacity(m);
    for _ in 0..m {
        let c = dist.sample(rng);
        let pool = &by_class[c];
        rows.push(pool[rng.random_range(0..pool.len())]);
        out_labels.push(c);
    }
    Ok((features.select(Axis(0), &rows), out_labels))
}
