//! Synthetic Gaussian-blob tasks.
//!
//! Known classes are isotropic Gaussians whose centers sit on a circle of
//! radius `radius` in the first two coordinates; the augmented class is one
//! more Gaussian at `ac_center`.

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{generate_candidate_set, AugmentedSplit, LabeledDataset, PartialDataset};
use crate::{seeded_rng, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BlobSpec {
    pub known_classes: usize,
    pub dim: usize,
    pub radius: f64,
    /// Standard deviation of every known blob.
    pub spread: f64,
    pub ac_center: Vec<f64>,
    pub ac_spread: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_unlabeled: usize,
    /// Share of known-class rows in the test and unlabeled data.
    pub theta: f64,
}

impl Default for BlobSpec {
    /// Three known classes around a far augmented cluster at the origin.
    fn default() -> Self {
        BlobSpec {
            known_classes: 3,
            dim: 2,
            radius: 6.0,
            spread: 1.0,
            ac_center: vec![0.0, 0.0],
            ac_spread: 1.0,
            n_train: 600,
            n_test: 600,
            n_unlabeled: 600,
            theta: 0.7,
        }
    }
}

impl BlobSpec {
    pub fn with_sizes(mut self, n_train: usize, n_test: usize, n_unlabeled: usize) -> Self {
        self.n_train = n_train;
        self.n_test = n_test;
        self.n_unlabeled = n_unlabeled;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.known_classes < 2 || self.dim < 2 {
            return Err(Error::InvalidArgument("blobs need >= 2 known classes and dim >= 2".into()));
        }
        if self.ac_center.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "ac center has {} coordinates, dim is {}",
                self.ac_center.len(),
                self.dim
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta {} not in [0, 1]", self.theta)));
        }
        Ok(())
    }

    pub fn center(&self, class: usize) -> Vec<f64> {
        if class == self.known_classes {
            return self.ac_center.clone();
        }
        let angle = 2.0 * std::f64::consts::PI * class as f64 / self.known_classes as f64;
        let mut c = vec![0.0; self.dim];
        c[0] = self.radius * angle.cos();
        c[1] = self.radius * angle.sin();
        c
    }

    fn draw<R: Rng + ?Sized>(&self, class: usize, rng: &mut R) -> Vec<f64> {
        let spread = if class == self.known_classes { self.ac_spread } else { self.spread };
        self.center(class)
            .into_iter()
            .map(|c| {
                let z: f64 = StandardNormal.sample(rng);
                c + spread * z
            })
            .collect()
    }

    fn rows<R: Rng + ?Sized>(&self, labels: &[usize], rng: &mut R) -> Array2<f64> {
        let mut x = Array2::zeros((labels.len(), self.dim));
        for (mut row, &l) in x.axis_iter_mut(Axis(0)).zip(labels) {
            for (dst, v) in row.iter_mut().zip(self.draw(l, rng)) {
                *dst = v;
            }
        }
        x
    }

    /// Labels of a test-distribution sample: each row is known with
    /// probability `theta` (uniform over known classes), else augmented.
    pub fn test_labels<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n)
            .map(|_| {
                if rng.random_bool(self.theta) {
                    rng.random_range(0..self.known_classes)
                } else {
                    self.known_classes
                }
            })
            .collect()
    }

    pub fn sample_test<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> (Array2<f64>, Vec<usize>) {
        let labels = self.test_labels(n, rng);
        (self.rows(&labels, rng), labels)
    }

    /// Balanced fully labeled dataset over all `known_classes + 1` blobs.
    pub fn labeled(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        self.validate()?;
        let mut rng = seeded_rng(seed);
        let k = self.known_classes + 1;
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let x = self.rows(&labels, &mut rng);
        LabeledDataset::new(x, labels, k)
    }

    /// A ready-made task: uniform candidate sets over the known classes for
    /// the training rows, and test / unlabeled rows from the `theta` mixture.
    pub fn split(&self, seed: u64) -> Result<AugmentedSplit> {
        self.validate()?;
        let mut rng = seeded_rng(seed);
        let k = self.known_classes;
        let truth: Vec<usize> = (0..self.n_train).map(|_| rng.random_range(0..k)).collect();
        let features = self.rows(&truth, &mut rng);
        let candidates = truth
            .iter()
            .map(|&y| generate_candidate_set(y, k, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let (test_features, test_labels) = self.sample_test(self.n_test, &mut rng);
        let (unlabeled, _) = self.sample_test(self.n_unlabeled, &mut rng);
        let mut class_names: Vec<String> = (0..k).map(|c| c.to_string()).collect();
        class_names.push("ac".into());
        Ok(AugmentedSplit {
            pll_train: PartialDataset::new(features, candidates, k)?,
            pll_truth: truth,
            unlabeled,
            test_features,
            test_labels,
            removed_fraction: 0.0,
            class_names,
        })
    }
}

/// Two isotropic unit Gaussians `separation` apart along the first axis.
/// Returns `n_pl` rows of the first and `n_u` rows of the mixture
/// `theta * first + (1 - theta) * second`; the mixture contains exactly
/// `round(theta * n_u)` rows of the first component.
pub fn two_gaussians(
    n_pl: usize,
    n_u: usize,
    theta: f64,
    separation: f64,
    dim: usize,
    seed: u64,
) -> (Array2<f64>, Array2<f64>) {
    let mut rng = seeded_rng(seed);
    let draw = |shift: f64, rng: &mut crate::Rng| -> Vec<f64> {
        (0..dim)
            .map(|j| {
                let z: f64 = StandardNormal.sample(rng);
                z + if j == 0 { shift } else { 0.0 }
            })
            .collect()
    };
    let pl: Vec<f64> = (0..n_pl).flat_map(|_| draw(0.0, &mut rng)).collect();
    let n_known = (theta * n_u as f64).round() as usize;
    let un: Vec<f64> = (0..n_u)
        .flat_map(|i| draw(if i < n_known { 0.0 } else { separation }, &mut rng))
        .collect();
    (
        Array2::from_shape_vec((n_pl, dim), pl).expect("shape"),
        Array2::from_shape_vec((n_u, dim), un).expect("shape"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_shapes_and_theta() {
        let spec = BlobSpec::default().with_sizes(300, 2000, 100);
        let split = spec.split(1).unwrap();
        assert_eq!(split.pll_train.n(), 300);
        assert_eq!(split.k(), 3);
        assert_eq!(split.unlabeled.nrows(), 100);
        assert!((split.known_fraction() - 0.7).abs() < 0.04);
        for (s, &y) in split.pll_train.candidates.iter().zip(&split.pll_truth) {
            assert!(s.contains(y) && !s.is_full());
        }
    }

    #[test]
    fn labeled_is_balanced() {
        let ds = BlobSpec::default().labeled(40, 2).unwrap();
        assert_eq!(ds.k, 4);
        assert_eq!(ds.labels.iter().filter(|&&l| l == 3).count(), 10);
    }
}
