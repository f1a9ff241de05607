//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use pllac::model::ClassifierParams;

/// Central-difference gradient of `f` at `params`.
pub fn numeric_gradient(params: &ClassifierParams, h: f64, mut f: impl FnMut(&ClassifierParams) -> f64) -> Vec<f64> {
    let base = params.to_flat();
    let mut p = params.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut x = base.clone();
        x[i] = base[i] + h;
        p.set_flat(&x).unwrap();
        let up = f(&p);
        x[i] = base[i] - h;
        p.set_flat(&x).unwrap();
        let down = f(&p);
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `|a - b|_2 / max(|a|_2, |b|_2)`, 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Confusion counts by direct tallying, `m[truth][pred]`.
pub fn brute_confusion(pred: &[usize], truth: &[usize], classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes]; classes];
    for c_true in 0..classes {
        for c_pred in 0..classes {
            m[c_true][c_pred] = pred
                .iter()
                .zip(truth)
                .filter(|&(&p, &t)| t == c_true && p == c_pred)
                .count() as u64;
        }
    }
    m
}

pub fn brute_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Mean F1 over the classes present in `truth`, F1 from precision and recall.
pub fn brute_macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut total = 0.0;
    let mut present = 0;
    for c in 0..classes {
        let support = truth.iter().filter(|&&t| t == c).count();
        if support == 0 {
            continue;
        }
        present += 1;
        let tp = pred.iter().zip(truth).filter(|&(&p, &t)| p == c && t == c).count() as f64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = tp / support as f64;
        total += if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    total / present as f64
}

/// Pairwise AUC: share of (positive, negative) pairs ranked correctly, ties 1/2.
pub fn brute_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| p).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(positive).filter(|(_, &p)| !p).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

pub fn brute_macro_auc(scores: ArrayView2<f64>, truth: &[usize]) -> f64 {
    let classes = scores.ncols();
    let mut vals = Vec::new();
    for c in 0..classes {
        let col: Vec<f64> = scores.column(c).to_vec();
        let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        if let Some(a) = brute_auc(&col, &pos) {
            vals.push(a);
        }
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Every subset of `0..k` that contains `y` and is not the full set, as sorted label lists.
pub fn admissible_sets(y: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << k) {
        if mask & (1 << y) == 0 || mask == (1 << k) - 1 {
            continue;
        }
        out.push((0..k).filter(|j| mask & (1 << j) != 0).collect());
    }
    out
}

/// A finite domain: `atoms` feature points, known-class joint `p(x, y)`
/// over `k` classes, and an augmented-class marginal `p_ac(x)`.
pub struct DiscreteDomain {
    pub atoms: Array2<f64>,
    /// `joint[[a, y]] = p(x = a, y)`, summing to 1.
    pub joint: Array2<f64>,
    pub ac: Vec<f64>,
    pub k: usize,
}

impl DiscreteDomain {
    pub fn random(atoms: usize, dim: usize, k: usize, rng: &mut impl rand::Rng) -> Self {
        let x = Array2::from_shape_fn((atoms, dim), |_| rng.random_range(-2.0..2.0));
        let mut joint = Array2::from_shape_fn((atoms, k), |_| rng.random_range(0.05..1.0));
        let s = joint.sum();
        joint /= s;
        let mut ac: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = ac.iter().sum();
        ac.iter_mut().for_each(|v| *v /= s);
        DiscreteDomain { atoms: x, joint, ac, k }
    }
}

/// Three known blobs on a circle of radius 4 and the augmented blob at (6.5, 0).
pub fn acceptance_blobs() -> pllac::synth::BlobSpec {
    pllac::synth::BlobSpec {
        radius: 4.0,
        ac_center: vec![6.5, 0.0],
        ..Default::default()
    }
}

/// Linear model, lr 3e-3 for 500 epochs, other settings at their defaults.
pub fn blob_config() -> pllac::harness::ExperimentConfig {
    pllac::harness::ExperimentConfig {
        lr: 3e-3,
        epochs: 500,
        ..Default::default()
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
