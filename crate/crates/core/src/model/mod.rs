//! Softmax classifiers with hand-written gradients.

mod adam;
mod checkpoint;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Architecture {
    Linear,
    /// One ReLU hidden layer of the given width.
    Mlp { hidden: usize },
}

/// A fully connected layer computing `x W^T + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    /// `out x in`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            weight: Array2::from_shape_simple_fn((outputs, inputs), || {
                rng.random_range(-limit..=limit)
            }),
            bias: Array1::zeros(outputs),
        }
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

/// Parameters of a classifier `f: R^d -> simplex(outputs)`.
///
/// Gradients share this type: a gradient is a `ClassifierParams` of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub arch: Architecture,
    pub layers: Vec<Dense>,
}

/// Intermediate values of a forward pass, reused by [`ClassifierParams::backward_cached`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    hidden_pre: Option<Array2<f64>>,
    hidden: Option<Array2<f64>>,
    pub probs: Array2<f64>,
}

impl ClassifierParams {
    pub fn zeros(arch: Architecture, input_dim: usize, outputs: usize) -> Self {
        let layers = match arch {
            Architecture::Linear => vec![Dense::zeros(input_dim, outputs)],
            Architecture::Mlp { hidden } => {
                vec![Dense::zeros(input_dim, hidden), Dense::zeros(hidden, outputs)]
            }
        };
        ClassifierParams { arch, layers }
    }

    pub fn init<R: Rng + ?Sized>(
        arch: Architecture,
        input_dim: usize,
        outputs: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || outputs < 2 {
            return Err(Error::InvalidArgument(format!(
                "classifier needs d >= 1 and >= 2 outputs, got d={input_dim}, outputs={outputs}"
            )));
        }
        let layers = match arch {
            Architecture::Linear => vec![Dense::glorot(input_dim, outputs, rng)],
            Architecture::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(Error::InvalidArgument("hidden width must be positive".into()));
                }
                vec![
                    Dense::glorot(input_dim, hidden, rng),
                    Dense::glorot(hidden, outputs, rng),
                ]
            }
        };
        Ok(ClassifierParams { arch, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.nrows()).unwrap_or(0)
    }

    pub fn zeros_like(&self) -> Self {
        ClassifierParams {
            arch: self.arch,
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.weight.ncols(), l.weight.nrows()))
                .collect(),
        }
    }

    /// `(name, values)` for every parameter tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layers.{i}.weight"), l.weight.as_slice().expect("standard layout")));
            out.push((format!("layers.{i}.bias"), l.bias.as_slice().expect("standard layout")));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 2);
        for l in self.layers.iter_mut() {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|(_, t)| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "flat vector of {} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[off..off + t.len()]);
            off += t.len();
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ClassifierParams, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.scaled_add(scale, &b.weight);
            a.bias.scaled_add(scale, &b.bias);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature batch".into()));
        }
        Ok(())
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(match self.arch {
            Architecture::Linear => self.layers[0].apply(x),
            Architecture::Mlp { .. } => {
                let h = self.layers[0].apply(x).mapv_into(relu);
                self.layers[1].apply(h.view())
            }
        })
    }

    /// Row-stochastic class probabilities.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(softmax_rows(self.logits(x)?))
    }

    pub fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        Ok(match self.arch {
            Architecture::Linear => ForwardCache {
                hidden_pre: None,
                hidden: None,
                probs: softmax_rows(self.layers[0].apply(x)),
            },
            Architecture::Mlp { .. } => {
                let pre = self.layers[0].apply(x);
                let h = pre.mapv(relu);
                let probs = softmax_rows(self.layers[1].apply(h.view()));
                ForwardCache {
                    hidden_pre: Some(pre),
                    hidden: Some(h),
                    probs,
                }
            }
        })
    }

    /// Gradient of `sum_i sum_c upstream[i, c] * f_c(x_i)` with respect to the
    /// parameters, where `upstream` is the loss gradient with respect to the
    /// output probabilities.
    pub fn backward(&self, x: ArrayView2<f64>, upstream: ArrayView2<f64>) -> Result<ClassifierParams> {
        let cache = self.forward_cached(x)?;
        self.backward_cached(x, &cache, upstream)
    }

    pub fn backward_cached(
        &self,
        x: ArrayView2<f64>,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
    ) -> Result<ClassifierParams> {
        if upstream.dim() != cache.probs.dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream {:?} vs output {:?}",
                upstream.dim(),
                cache.probs.dim()
            )));
        }
        let dlogits = softmax_backward(cache.probs.view(), upstream);
        let mut grad = self.zeros_like();
        match self.arch {
            Architecture::Linear => {
                grad.layers[0].weight = dlogits.t().dot(&x);
                grad.layers[0].bias = dlogits.sum_axis(Axis(0));
            }
            Architecture::Mlp { .. } => {
                let h = cache.hidden.as_ref().expect("mlp cache");
                let pre = cache.hidden_pre.as_ref().expect("mlp cache");
                grad.layers[1].weight = dlogits.t().dot(h);
                grad.layers[1].bias = dlogits.sum_axis(Axis(0));
                let mut dh = dlogits.dot(&self.layers[1].weight);
                Zip::from(&mut dh).and(pre).for_each(|g, &p| {
                    if p <= 0.0 {
                        *g = 0.0;
                    }
                });
                grad.layers[0].weight = dh.t().dot(&x);
                grad.layers[0].bias = dh.sum_axis(Axis(0));
            }
        }
        Ok(grad)
    }
}

#[inline]
fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    logits
}

/// `dL/dz = p * (g - <g, p>)` row by row.
fn softmax_backward(probs: ArrayView2<f64>, upstream: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(probs.dim());
    Zip::from(out.rows_mut())
        .and(probs.rows())
        .and(upstream.rows())
        .for_each(|mut o, p, g| {
            let dot = p.dot(&g);
            Zip::from(&mut o).and(&p).and(&g).for_each(|o, &p, &g| *o = p * (g - dot));
        });
    out
}
