mod common;

use std::collections::HashMap;

use common::admissible_sets;
use ndarray::Array2;
use pllac::data::{generate_candidate_set, make_augmented_split, LabeledDataset, SplitOptions};
use pllac::seeded_rng;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p_value(counts: &HashMap<Vec<usize>, u64>, cells: &[Vec<usize>], draws: u64) -> f64 {
    let expected = draws as f64 / cells.len() as f64;
    let stat: f64 = cells
        .iter()
        .map(|c| {
            let o = *counts.get(c).unwrap_or(&0) as f64;
            (o - expected).powi(2) / expected
        })
        .sum();
    let dist = ChiSquared::new((cells.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn candidate_sets_are_uniform_over_admissible_subsets() {
    let draws = 100_000u64;
    for (k, seed) in [(3usize, 1u64), (4, 2), (5, 3)] {
        let mut rng = seeded_rng(seed);
        for y in [0, k - 1] {
            let cells = admissible_sets(y, k);
            assert_eq!(cells.len(), (1 << (k - 1)) - 1);
            let mut counts = HashMap::new();
            for _ in 0..draws {
                let s = generate_candidate_set(y, k, &mut rng).unwrap();
                *counts.entry(s.labels()).or_insert(0u64) += 1;
            }
            assert!(counts.keys().all(|c| cells.contains(c)), "inadmissible set drawn for k={k}");
            let p = chi_square_p_value(&counts, &cells, draws);
            assert!(p > 0.01, "k={k} y={y}: chi-square p-value {p}");
        }
    }
}

fn balanced(k: usize, n: usize) -> LabeledDataset {
    // row i carries its own index as a feature so rows can be tracked
    let features = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { i as f64 } else { (i % 7) as f64 });
    LabeledDataset::new(features, (0..n).map(|i| i % k).collect(), k).unwrap()
}

/// Probability that a training row is moved to the test pool, by enumeration.
fn removal_probability(k: usize, ac: usize) -> f64 {
    (0..k)
        .map(|y| {
            let sets = admissible_sets(y, k);
            let hit = sets.iter().filter(|s| s.contains(&ac)).count();
            hit as f64 / sets.len() as f64 / k as f64
        })
        .sum()
}

#[test]
fn removed_fraction_concentrates_on_its_enumerated_value() {
    for (k, ac) in [(4usize, 1usize), (6, 5), (10, 0)] {
        let data = balanced(k, 20_000);
        let split = make_augmented_split(&data, &SplitOptions::new(ac), &mut seeded_rng(k as u64)).unwrap();
        let p = removal_probability(k, ac);
        let n_train = 16_000.0;
        let se = (p * (1.0 - p) / n_train).sqrt();
        assert!(
            (split.removed_fraction - p).abs() < 4.0 * se,
            "k={k}: removed {} vs {p}",
            split.removed_fraction
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_preserves_rows_and_hides_the_augmented_class(k in 2usize..7, n in 30usize..200, seed in 0u64..1000, frac in 0.1f64..0.6) {
        let data = balanced(k, n.max(3 * k));
        let ac = (seed as usize) % k;
        let opts = SplitOptions { ac_class: ac, test_fraction: frac, unlabeled_count: Some(37) };
        let Ok(split) = make_augmented_split(&data, &opts, &mut seeded_rng(seed)) else {
            // only possible when every training row was moved
            return Ok(());
        };
        let known = k - 1;
        prop_assert_eq!(split.k(), known);
        // every original row lands in exactly one of train and test
        let mut ids: Vec<usize> = split.pll_train.features.column(0).iter()
            .chain(split.test_features.column(0).iter())
            .map(|&v| v as usize)
            .collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..data.n()).collect::<Vec<_>>());
        for (i, s) in split.pll_train.candidates.iter().enumerate() {
            prop_assert_eq!(s.universe(), known);
            prop_assert!(s.contains(split.pll_truth[i]));
            prop_assert!(!s.is_empty());
            prop_assert!(split.pll_truth[i] < known);
        }
        // labels agree with the original rows after re-indexing
        let remap = |c: usize| if c == ac { known } else if c > ac { c - 1 } else { c };
        for (row, &l) in split.test_features.column(0).iter().zip(&split.test_labels) {
            prop_assert_eq!(remap(data.labels[*row as usize]), l);
        }
        for (row, &l) in split.pll_train.features.column(0).iter().zip(&split.pll_truth) {
            prop_assert_eq!(remap(data.labels[*row as usize]), l);
        }
        // every augmented-class row is in the test pool
        let ac_rows = data.labels.iter().filter(|&&l| l == ac).count();
        prop_assert_eq!(split.test_labels.iter().filter(|&&l| l == known).count(), ac_rows);
        // unlabeled rows are drawn from the test pool
        prop_assert_eq!(split.unlabeled.nrows(), 37);
        let test_ids: std::collections::HashSet<usize> = split.test_features.column(0).iter().map(|&v| v as usize).collect();
        prop_assert!(split.unlabeled.column(0).iter().all(|&v| test_ids.contains(&(v as usize))));
        prop_assert!((0.0..=1.0).contains(&split.removed_fraction));
        let again = make_augmented_split(&data, &opts, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(&again.pll_train.candidates, &split.pll_train.candidates);
        prop_assert_eq!(&again.unlabeled, &split.unlabeled);
    }
}
