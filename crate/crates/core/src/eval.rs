//! Predictions and metrics over the `k + 1` output classes.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::model::ClassifierParams;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_auc: f64,
    /// F1 of every class (0 for classes never predicted nor present).
    pub per_class_f1: Vec<f64>,
    /// One-vs-rest AUC per class; `None` where a class has no positives or no negatives.
    pub per_class_auc: Vec<Option<f64>>,
    /// `confusion[truth][pred]`.
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    /// Recall of one class, `None` if it never occurs in the truth.
    pub fn recall(&self, class: usize) -> Option<f64> {
        let row = &self.confusion[class];
        let support: u64 = row.iter().sum();
        (support > 0).then(|| row[class] as f64 / support as f64)
    }
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(probs: ArrayView2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn predict(params: &ClassifierParams, features: ArrayView2<f64>) -> Result<Vec<usize>> {
    Ok(argmax_rows(params.forward(features)?.view()))
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::MetricUndefined("empty input".into()));
    }
    Ok(())
}

pub fn confusion_matrix(pred: &[usize], truth: &[usize], class_count: usize) -> Result<Vec<Vec<u64>>> {
    check_lengths(pred, truth)?;
    let mut m = vec![vec![0u64; class_count]; class_count];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= class_count || t >= class_count {
            return Err(Error::InvalidArgument(format!(
                "class index {} outside 0..{class_count}",
                p.max(t)
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

pub fn accuracy_from_confusion(confusion: &[Vec<u64>]) -> f64 {
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..confusion.len()).map(|c| confusion[c][c]).sum();
    trace as f64 / total as f64
}

pub fn per_class_f1(confusion: &[Vec<u64>]) -> Vec<f64> {
    let c = confusion.len();
    (0..c)
        .map(|j| {
            let tp = confusion[j][j] as f64;
            let support: u64 = confusion[j].iter().sum();
            let predicted: u64 = (0..c).map(|t| confusion[t][j]).sum();
            let denom = support as f64 + predicted as f64;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp / denom
            }
        })
        .collect()
}

/// Unweighted mean of per-class F1 over the classes present in the truth.
pub fn macro_f1_from_confusion(confusion: &[Vec<u64>]) -> f64 {
    let f1 = per_class_f1(confusion);
    let present: Vec<f64> = confusion
        .iter()
        .zip(&f1)
        .filter(|(row, _)| row.iter().sum::<u64>() > 0)
        .map(|(_, &f)| f)
        .collect();
    present.iter().sum::<f64>() / present.len() as f64
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64)
}

pub fn macro_f1(pred: &[usize], truth: &[usize], class_count: usize) -> Result<f64> {
    Ok(macro_f1_from_confusion(&confusion_matrix(pred, truth, class_count)?))
}

/// Mann-Whitney AUC of `scores` for the positive rows, ties counted 1/2.
/// `None` if either side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average 1-based ranks over tie groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&r| positive[r]).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// One-vs-rest AUC per class from a score matrix.
pub fn per_class_auc(scores: ArrayView2<f64>, truth: &[usize], class_count: usize) -> Result<Vec<Option<f64>>> {
    if scores.nrows() != truth.len() || scores.ncols() != class_count {
        return Err(Error::ShapeMismatch(format!(
            "scores {:?} for {} labels over {class_count} classes",
            scores.dim(),
            truth.len()
        )));
    }
    Ok((0..class_count)
        .map(|c| {
            let col: Vec<f64> = scores.column(c).to_vec();
            let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            binary_auc(&col, &pos)
        })
        .collect())
}

/// Unweighted mean of the defined one-vs-rest AUCs.
pub fn macro_auc(scores: ArrayView2<f64>, truth: &[usize], class_count: usize) -> Result<f64> {
    mean_defined(&per_class_auc(scores, truth, class_count)?)
}

fn mean_defined(aucs: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::MetricUndefined("no class has both positives and negatives".into()));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Full report from hard predictions plus a score matrix used for AUC.
pub fn evaluate_predictions(
    pred: &[usize],
    scores: ArrayView2<f64>,
    truth: &[usize],
    class_count: usize,
) -> Result<EvalReport> {
    let confusion = confusion_matrix(pred, truth, class_count)?;
    let per_class_auc = per_class_auc(scores, truth, class_count)?;
    Ok(EvalReport {
        accuracy: accuracy_from_confusion(&confusion),
        macro_f1: macro_f1_from_confusion(&confusion),
        macro_auc: mean_defined(&per_class_auc)?,
        per_class_f1: per_class_f1(&confusion),
        per_class_auc,
        confusion,
    })
}

/// Report for argmax predictions of a probability matrix.
pub fn evaluate_probs(probs: ArrayView2<f64>, truth: &[usize]) -> Result<EvalReport> {
    let pred = argmax_rows(probs);
    evaluate_predictions(&pred, probs, truth, probs.ncols())
}

pub fn evaluate_model(params: &ClassifierParams, features: ArrayView2<f64>, truth: &[usize]) -> Result<EvalReport> {
    let probs = params.forward(features)?;
    evaluate_probs(probs.view(), truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn argmax_and_ties() {
        let p = array![[0.1, 0.7, 0.2], [0.5, 0.5, 0.0], [0.2, 0.2, 0.6]];
        assert_eq!(argmax_rows(p.view()), vec![1, 0, 2]);
    }

    #[test]
    fn f1_hand_values() {
        let truth = [0, 0, 1, 1];
        assert_abs_diff_eq!(macro_f1(&truth, &truth, 2).unwrap(), 1.0);
        let f = macro_f1(&[0, 0, 0, 0], &truth, 2).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 3.0, epsilon = 1e-15);
        assert!(macro_f1(&[], &[], 2).is_err());
    }

    #[test]
    fn absent_classes_are_skipped_in_macro_f1() {
        // class 2 never occurs in the truth but is predicted once
        let f = macro_f1(&[0, 1, 2], &[0, 1, 1], 3).unwrap();
        let conf = confusion_matrix(&[0, 1, 2], &[0, 1, 1], 3).unwrap();
        let f1 = per_class_f1(&conf);
        assert_eq!(f1[2], 0.0);
        assert_abs_diff_eq!(f, (f1[0] + f1[1]) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn auc_hand_values() {
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
        let labels = [true, true, false, true, false, false];
        assert_abs_diff_eq!(binary_auc(&scores, &labels).unwrap(), 8.0 / 9.0, epsilon = 1e-15);
        assert_eq!(binary_auc(&[0.3; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(binary_auc(&[0.1, 0.9], &[false, true]), Some(1.0));
        assert_eq!(binary_auc(&[0.1, 0.9], &[true, true]), None);
    }

    #[test]
    fn macro_auc_needs_one_defined_class() {
        let probs = array![[0.6, 0.4], [0.7, 0.3]];
        assert!(macro_auc(probs.view(), &[0, 0], 2).is_err());
        let probs = array![[0.6, 0.4], [0.3, 0.7]];
        assert_eq!(macro_auc(probs.view(), &[0, 1], 2).unwrap(), 1.0);
    }

    #[test]
    fn report_serializes_to_one_object() {
        let probs = array![[0.6, 0.3, 0.1], [0.2, 0.7, 0.1], [0.1, 0.2, 0.7]];
        let r = evaluate_probs(probs.view(), &[0, 1, 1]).unwrap();
        assert_abs_diff_eq!(r.accuracy, 2.0 / 3.0, epsilon = 1e-15);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with('{') && json.contains("\"confusion\":[[1,0,0],[0,1,1],[0,0,0]]"));
        assert_eq!(r.recall(1), Some(0.5));
        assert_eq!(r.recall(2), None);
    }
}
