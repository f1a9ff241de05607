use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::data::CandidateSet;
use crate::{Error, Result};

/// Per-row weights over the known classes, supported on each row's candidate set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceMatrix {
    weights: Array2<f64>,
}

impl ConfidenceMatrix {
    /// Uniform over each candidate set.
    pub fn uniform(candidates: &[CandidateSet], k: usize) -> Self {
        let mut weights = Array2::zeros((candidates.len(), k));
        for (i, s) in candidates.iter().enumerate() {
            let w = 1.0 / s.len() as f64;
            for j in s.iter() {
                weights[[i, j]] = w;
            }
        }
        ConfidenceMatrix { weights }
    }

    pub fn from_weights(weights: Array2<f64>, candidates: &[CandidateSet]) -> Result<Self> {
        let m = ConfidenceMatrix { weights };
        m.validate(candidates)?;
        Ok(m)
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.weights.row(i)
    }

    pub fn set_row(&mut self, i: usize, values: &[f64]) {
        for (dst, &v) in self.weights.row_mut(i).iter_mut().zip(values) {
            *dst = v;
        }
    }

    pub fn nrows(&self) -> usize {
        self.weights.nrows()
    }

    pub fn validate(&self, candidates: &[CandidateSet]) -> Result<()> {
        if self.weights.nrows() != candidates.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} confidence rows for {} candidate sets",
                self.weights.nrows(),
                candidates.len()
            )));
        }
        for (i, (row, s)) in self.weights.rows().into_iter().zip(candidates).enumerate() {
            let mut sum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if p < 0.0 || (!s.contains(j) && p != 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "confidence row {i} has weight {p} on class {j}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("confidence row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Confidences renormalized from model outputs over each candidate set:
/// `p_ij = f_j(x_i) / sum_{o in S_i} f_o(x_i)` for `j` in `S_i`, zero elsewhere.
/// Rows whose candidate mass is below `floor` fall back to uniform.
pub fn update_confidence(
    outputs: ArrayView2<f64>,
    candidates: &[CandidateSet],
    k: usize,
    floor: f64,
) -> Result<ConfidenceMatrix> {
    if outputs.nrows() != candidates.len() || outputs.ncols() < k {
        return Err(Error::ShapeMismatch(format!(
            "outputs {:?} for {} rows over {k} known classes",
            outputs.dim(),
            candidates.len()
        )));
    }
    let mut weights = Array2::zeros((candidates.len(), k));
    for (i, s) in candidates.iter().enumerate() {
        let mass: f64 = s.iter().map(|j| outputs[[i, j]]).sum();
        if mass < floor || !mass.is_finite() {
            let w = 1.0 / s.len() as f64;
            s.iter().for_each(|j| weights[[i, j]] = w);
        } else {
            s.iter().for_each(|j| weights[[i, j]] = outputs[[i, j]] / mass);
        }
    }
    Ok(ConfidenceMatrix { weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn set(k: usize, labels: &[usize]) -> CandidateSet {
        CandidateSet::from_labels(k, labels).unwrap()
    }

    #[test]
    fn hand_normalization() {
        let c = update_confidence(array![[0.6, 0.2, 0.1, 0.1]].view(), &[set(3, &[0, 2])], 3, 1e-12).unwrap();
        assert_abs_diff_eq!(c.row(0)[0], 6.0 / 7.0, epsilon = 1e-12);
        assert_eq!(c.row(0)[1], 0.0);
        assert_abs_diff_eq!(c.row(0)[2], 1.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn singleton_is_one_hot_and_uniform_outputs_give_uniform() {
        let cands = [set(3, &[1]), set(3, &[0, 1, 2])];
        let c = update_confidence(array![[0.1, 0.2, 0.3, 0.4], [0.25, 0.25, 0.25, 0.25]].view(), &cands, 3, 1e-12)
            .unwrap();
        assert_eq!(c.row(0).to_vec(), vec![0.0, 1.0, 0.0]);
        for j in 0..3 {
            assert_abs_diff_eq!(c.row(1)[j], 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(ConfidenceMatrix::uniform(&cands, 3).row(1).to_vec(), c.row(1).to_vec());
    }

    #[test]
    fn tiny_mass_falls_back_to_uniform() {
        let c = update_confidence(array![[0.0, 0.0, 1.0]].view(), &[set(2, &[0, 1])], 2, 1e-12).unwrap();
        assert_eq!(c.row(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn validate_rejects_off_support_mass() {
        let cands = [set(2, &[0])];
        assert!(ConfidenceMatrix::from_weights(array![[0.5, 0.5]], &cands).is_err());
        assert!(ConfidenceMatrix::from_weights(array![[1.0, 0.0]], &cands).is_ok());
    }

    proptest! {
        #[test]
        fn updates_stay_valid(raw in proptest::collection::vec(0.0f64..1.0, 20), mask in 1u64..15) {
            let probs = Array2::from_shape_vec((4, 5), raw).unwrap();
            let labels: Vec<usize> = (0..4).filter(|j| mask & (1 << j) != 0).collect();
            let cands = vec![set(4, &labels); 4];
            let c = update_confidence(probs.view(), &cands, 4, 1e-12).unwrap();
            prop_assert!(c.validate(&cands).is_ok());
        }
    }
}
