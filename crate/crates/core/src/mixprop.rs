//! Mixture-proportion estimation with kernel mean embeddings.
//!
//! With `mu_U` and `mu_PL` the empirical embeddings of the unlabeled and the
//! partially labeled features, the distance curve
//!
//! ```text
//! d(lambda) = min_{w in simplex} || mu_U - lambda mu_PL - (1 - lambda) sum_a w_a phi_a ||_H
//! ```
//!
//! stays near zero while `mu_U` can still be written as `lambda mu_PL` plus a
//! distribution, i.e. for `lambda <= theta`, and grows once `lambda` passes
//! the true proportion. The estimate is the last grid point before the curve's
//! slope crosses a threshold shrinking like `1/sqrt(n)`.
//!
//! The atoms `phi_a` are the mean embeddings of k-means groups of the pooled
//! rows plus the two empirical embeddings themselves, so `d(0) = 0` and `d`
//! is non-decreasing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seeded_rng, Error, Result, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    /// Gaussian kernel bandwidth; `NaN` for fixed estimates.
    pub bandwidth: f64,
    /// `(lambda, d(lambda))` samples.
    pub curve: Vec<(f64, f64)>,
}

impl ThetaEstimate {
    pub fn write_curve_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "lambda,distance").map_err(io)?;
        for (l, d) in &self.curve {
            writeln!(w, "{l},{d}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Pass-through estimate.
pub fn fixed_theta(value: f64) -> Result<ThetaEstimate> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidArgument(format!("theta {value} not in [0, 1]")));
    }
    Ok(ThetaEstimate {
        theta_hat: value,
        bandwidth: f64::NAN,
        curve: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeConfig {
    /// Number of lambda values on `[0, 1]`.
    pub grid_points: usize,
    /// Slope threshold factor; the threshold is `tau / sqrt(min(n, n_U))`.
    pub tau: f64,
    /// Rows kept per side before any kernel computation.
    pub sample_cap: usize,
    /// Number of k-means groups of the pooled rows whose mean embeddings
    /// serve as convex-hull atoms.
    pub atoms: usize,
    /// Rows used by the median heuristic.
    pub bandwidth_sample_cap: usize,
    /// Fixed bandwidth; median heuristic when `None`.
    pub bandwidth: Option<f64>,
    /// Reduced-gradient tolerance of the inner solver.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KmeConfig {
    fn default() -> Self {
        KmeConfig {
            grid_points: 64,
            tau: 6.0,
            sample_cap: 4000,
            atoms: 64,
            bandwidth_sample_cap: 1000,
            bandwidth: None,
            tol: 1e-12,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Rows sorted lexicographically, making results independent of input order.
fn canonical_rows(x: ArrayView2<f64>) -> Array2<f64> {
    let mut idx: Vec<usize> = (0..x.nrows()).collect();
    idx.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    x.select(Axis(0), &idx)
}

fn subsample(x: Array2<f64>, cap: usize, rng: &mut Rng) -> Array2<f64> {
    if x.nrows() <= cap {
        return x;
    }
    let mut idx = sample(rng, x.nrows(), cap).into_vec();
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

/// Median pairwise Euclidean distance over at most `sample_cap` rows (zero
/// distances between duplicate rows included).
pub fn median_bandwidth(features: ArrayView2<f64>, sample_cap: usize, rng: &mut Rng) -> Result<f64> {
    if features.nrows() < 2 {
        return Err(Error::InvalidArgument("bandwidth needs at least 2 rows".into()));
    }
    let x = subsample(canonical_rows(features), sample_cap.max(2), rng);
    let n = x.nrows();
    let mut dists: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let x = &x;
            (i + 1..n).map(move |j| sq_dist(x.row(i), x.row(j)).sqrt())
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median > 0.0 && median.is_finite() {
        Ok(median)
    } else if dists[m - 1] > 0.0 {
        // more than half the pairs are duplicates; fall back to the mean distance
        Ok(dists.iter().sum::<f64>() / m as f64)
    } else {
        Err(Error::DegenerateBandwidth)
    }
}

struct Gaussian {
    gamma: f64,
}

impl Gaussian {
    fn new(bandwidth: f64) -> Self {
        Gaussian {
            gamma: 1.0 / (2.0 * bandwidth * bandwidth),
        }
    }

    fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        (-self.gamma * sq_dist(a, b)).exp()
    }
}

/// Lloyd's k-means with k-means++ seeding; returns the group of every row.
fn kmeans_groups(x: &Array2<f64>, groups: usize, rng: &mut Rng) -> Vec<usize> {
    let n = x.nrows();
    let g = groups.min(n).max(1);
    let mut centers: Vec<Array1<f64>> = vec![x.row(rng.random_range(0..n)).to_owned()];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers[0].view())).collect();
    while centers.len() < g {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random_range(0.0..total);
        let mut pick = n - 1;
        for (i, &d) in nearest.iter().enumerate() {
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = x.row(pick).to_owned();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), c.view()));
        }
        centers.push(c);
    }
    let mut assign = vec![0usize; n];
    for _ in 0..25 {
        let mut changed = false;
        for (i, a) in assign.iter_mut().enumerate() {
            let best = (0..centers.len())
                .min_by(|&p, &q| {
                    sq_dist(x.row(i), centers[p].view()).total_cmp(&sq_dist(x.row(i), centers[q].view()))
                })
                .unwrap_or(0);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        let mut sums = vec![Array1::<f64>::zeros(x.ncols()); centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (i, &a) in assign.iter().enumerate() {
            sums[a] += &x.row(i);
            counts[a] += 1;
        }
        for ((c, s), &cnt) in centers.iter_mut().zip(sums).zip(&counts) {
            if cnt > 0 {
                *c = s / cnt as f64;
            }
        }
        if !changed {
            break;
        }
    }
    // drop empty groups
    let mut remap = vec![usize::MAX; centers.len()];
    let mut next = 0;
    for &a in &assign {
        if remap[a] == usize::MAX {
            remap[a] = next;
            next += 1;
        }
    }
    assign.iter().map(|&a| remap[a]).collect()
}

/// Solves `[H_PP 1; 1^T 0] [z; nu] = [f_P; 1]` by Gaussian elimination with
/// partial pivoting. Returns `None` for a singular system.
fn solve_kkt(h: &Array2<f64>, f: &Array1<f64>, passive: &[usize]) -> Option<(Vec<f64>, f64)> {
    let p = passive.len();
    let dim = p + 1;
    let mut a = vec![vec![0.0; dim + 1]; dim];
    for (r, &i) in passive.iter().enumerate() {
        for (c, &j) in passive.iter().enumerate() {
            a[r][c] = h[[i, j]];
        }
        a[r][p] = 1.0;
        a[r][dim] = f[i];
    }
    for c in 0..p {
        a[p][c] = 1.0;
    }
    a[p][dim] = 1.0;
    for col in 0..dim {
        let piv = (col..dim).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..dim {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=dim {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; dim];
    for r in (0..dim).rev() {
        let mut acc = a[r][dim];
        for c in r + 1..dim {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let nu = x[p];
    x.truncate(p);
    Some((x, nu))
}

/// Minimizes `1/2 w^T H w - f^T w` over the probability simplex with a primal
/// active-set method started from the feasible point `w`.
fn simplex_qp_active_set(
    h: &Array2<f64>,
    f: &Array1<f64>,
    w: &mut Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<()> {
    let m = w.len();
    let mut passive: Vec<usize> = (0..m).filter(|&j| w[j] > 0.0).collect();
    let mut last_residual = f64::INFINITY;
    let mut just_added = None;
    for _ in 0..max_iter {
        let (z, _) = solve_kkt(h, f, &passive).ok_or(Error::SolverNotConverged {
            residual: last_residual,
        })?;
        if z.iter().all(|&v| v > 0.0) {
            w.fill(0.0);
            for (&j, &v) in passive.iter().zip(&z) {
                w[j] = v;
            }
            let grad = h.dot(&*w) - f;
            // multiplier of the sum constraint: the common gradient on the support
            let nu = passive.iter().map(|&j| grad[j]).sum::<f64>() / passive.len() as f64;
            let (best, reduced) = (0..m)
                .filter(|j| !passive.contains(j))
                .map(|j| (j, grad[j] - nu))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((usize::MAX, 0.0));
            last_residual = (-reduced).max(0.0);
            if reduced >= -tol {
                return Ok(());
            }
            passive.push(best);
            passive.sort_unstable();
            just_added = Some(best);
        } else {
            if passive.iter().zip(&z).any(|(&j, &zj)| Some(j) == just_added && zj <= 0.0) {
                // the entering atom cannot improve at working precision
                return Ok(());
            }
            let mut alpha = 1.0f64;
            for (&j, &zj) in passive.iter().zip(&z) {
                if zj <= 0.0 {
                    alpha = alpha.min(w[j] / (w[j] - zj));
                }
            }
            for (&j, &zj) in passive.iter().zip(&z) {
                w[j] += alpha * (zj - w[j]);
            }
            let blocking: Vec<usize> = passive
                .iter()
                .zip(&z)
                .filter(|&(&j, &zj)| zj <= 0.0 && w[j] <= 1e-15)
                .map(|(&j, _)| j)
                .collect();
            for j in &blocking {
                w[*j] = 0.0;
            }
            passive.retain(|j| w[*j] > 0.0);
            if passive.is_empty() {
                // numerically emptied; restart from the best vertex
                let best = (0..m).max_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap_or(0);
                w.fill(0.0);
                w[best] = 1.0;
                passive.push(best);
            }
            just_added = None;
        }
    }
    Err(Error::SolverNotConverged {
        residual: last_residual,
    })
}

/// Estimates the share of the partially labeled (known-class) distribution in
/// the unlabeled data.
pub fn estimate_theta(
    pll_features: ArrayView2<f64>,
    unlabeled_features: ArrayView2<f64>,
    cfg: &KmeConfig,
) -> Result<ThetaEstimate> {
    if pll_features.nrows() == 0 || unlabeled_features.nrows() == 0 {
        return Err(Error::InvalidArgument("theta estimation needs non-empty inputs".into()));
    }
    if pll_features.ncols() != unlabeled_features.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "pll has {} columns, unlabeled {}",
            pll_features.ncols(),
            unlabeled_features.ncols()
        )));
    }
    if cfg.grid_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 grid points".into()));
    }
    let mut rng = seeded_rng(cfg.seed);
    let pl = subsample(canonical_rows(pll_features), cfg.sample_cap, &mut rng);
    let un = subsample(canonical_rows(unlabeled_features), cfg.sample_cap, &mut rng);
    let (n_pl, n_un) = (pl.nrows(), un.nrows());
    let pooled = ndarray::concatenate(Axis(0), &[pl.view(), un.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;

    let bandwidth = match cfg.bandwidth {
        Some(b) if b > 0.0 && b.is_finite() => b,
        Some(b) => return Err(Error::InvalidArgument(format!("bandwidth {b} must be positive"))),
        None => median_bandwidth(pooled.view(), cfg.bandwidth_sample_cap, &mut rng)?,
    };
    let kernel = Gaussian::new(bandwidth);
    let group = kmeans_groups(&pooled, cfg.atoms, &mut rng);
    let groups = group.iter().max().map_or(0, |g| g + 1);

    // one pass over all pooled pairs: group-by-group kernel sums plus each
    // row's mean kernel value against the PL and the U rows
    let partial: Vec<(Vec<f64>, f64, f64)> = (0..pooled.nrows())
        .into_par_iter()
        .map(|i| {
            let xi = pooled.row(i);
            let mut by_group = vec![0.0; groups];
            let (mut to_pl, mut to_un) = (0.0, 0.0);
            for j in 0..pooled.nrows() {
                let v = kernel.eval(xi, pooled.row(j));
                by_group[group[j]] += v;
                if j < n_pl {
                    to_pl += v;
                } else {
                    to_un += v;
                }
            }
            (by_group, to_pl / n_pl as f64, to_un / n_un as f64)
        })
        .collect();
    let mut sizes = vec![0.0; groups];
    for &g in &group {
        sizes[g] += 1.0;
    }
    // atoms: group means, then mu_PL, then mu_U
    let m = groups + 2;
    let (ia, iu) = (groups, groups + 1);
    let mut gram = Array2::<f64>::zeros((m, m));
    let mut pp = 0.0;
    let mut uu = 0.0;
    let mut pu = 0.0;
    for (i, (by_group, to_pl, to_un)) in partial.iter().enumerate() {
        let gi = group[i];
        for (gj, v) in by_group.iter().enumerate() {
            gram[[gi, gj]] += v / (sizes[gi] * sizes[gj]);
        }
        gram[[gi, ia]] += to_pl / sizes[gi];
        gram[[gi, iu]] += to_un / sizes[gi];
        if i < n_pl {
            pp += to_pl / n_pl as f64;
        } else {
            uu += to_un / n_un as f64;
            pu += to_pl / n_un as f64;
        }
    }
    for g in 0..groups {
        gram[[ia, g]] = gram[[g, ia]];
        gram[[iu, g]] = gram[[g, iu]];
    }
    gram[[ia, ia]] = pp;
    gram[[iu, iu]] = uu;
    gram[[ia, iu]] = pu;
    gram[[iu, ia]] = pu;
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix".into()));
    }
    let atom_pl = gram.column(ia).to_owned();
    let atom_un = gram.column(iu).to_owned();
    let ridge = 1e-12 * (0..m).map(|i| gram[[i, i]]).sum::<f64>() / m as f64;

    let mut w = Array1::zeros(m);
    w[iu] = 1.0;
    let grid = cfg.grid_points;
    let mut curve = Vec::with_capacity(grid);
    for i in 0..grid {
        let lambda = i as f64 / (grid - 1) as f64;
        let s = 1.0 - lambda;
        let b_norm2 = uu - 2.0 * lambda * pu + lambda * lambda * pp;
        let c = &atom_un - &(&atom_pl * lambda);
        let dist2 = if s > 0.0 {
            let mut h = &gram * (2.0 * s * s);
            h.diag_mut().mapv_inplace(|v| v + ridge);
            let f = &c * (2.0 * s);
            simplex_qp_active_set(&h, &f, &mut w, cfg.tol, cfg.max_iter)?;
            b_norm2 - 2.0 * s * w.dot(&c) + s * s * w.dot(&gram.dot(&w))
        } else {
            b_norm2
        };
        curve.push((lambda, dist2.max(0.0).sqrt()));
    }

    let threshold = cfg.tau / (n_pl.min(n_un) as f64).sqrt();
    let theta_hat = select_by_slope(&curve, threshold);
    Ok(ThetaEstimate {
        theta_hat: theta_hat.clamp(0.0, 1.0),
        bandwidth,
        curve,
    })
}

/// Last grid point before the first forward slope above `threshold`; 1 if the
/// slope never crosses it.
pub fn select_by_slope(curve: &[(f64, f64)], threshold: f64) -> f64 {
    for pair in curve.windows(2) {
        let (l0, d0) = pair[0];
        let (l1, d1) = pair[1];
        if (d1 - d0) / (l1 - l0) > threshold {
            return l0;
        }
    }
    curve.last().map(|&(l, _)| l).unwrap_or(1.0)
}
