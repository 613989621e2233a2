//! Univariate Gaussian-kernel smoothing: Nadaraya–Watson regression,
//! bandwidth rules, leave-one-out cross-validation and density estimation.

mod binned;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub use binned::BinnedSums;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn gaussian_kernel(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Evaluation engine for kernel-weighted sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoother {
    /// Direct `O(n_train · n_eval)` summation.
    Exact,
    /// Linear binning onto a regular grid followed by a discrete convolution.
    Binned,
    /// `Binned` for large problems whose bandwidth the grid can resolve,
    /// `Exact` otherwise.
    #[default]
    Auto,
}

/// Problems smaller than this many kernel evaluations are always summed
/// exactly under [`Smoother::Auto`].
const AUTO_EXACT_WORK: usize = 1 << 20;

impl Smoother {
    fn use_binned(self, n_train: usize, n_eval: usize, range: f64, h: f64) -> bool {
        match self {
            Smoother::Exact => false,
            Smoother::Binned => binned::node_count(range, h).is_some(),
            Smoother::Auto => {
                n_train.saturating_mul(n_eval) > AUTO_EXACT_WORK
                    && binned::node_count(range, h).is_some()
            }
        }
    }
}

fn spread(x: &[f64]) -> f64 {
    let sd = stats::sd(x);
    let iqr = stats::iqr(x) / 1.34;
    // A zero IQR (heavily tied data) falls back to the standard deviation.
    if iqr > 0.0 {
        sd.min(iqr)
    } else {
        sd
    }
}

fn check_spread(x: &[f64]) -> Result<f64> {
    if x.len() < 2 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ZeroSpread);
    }
    let s = spread(x);
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::ZeroSpread)
    }
}

/// Silverman's rule of thumb, `1.06 · min(sd, IQR/1.34) · n^{-1/5}`.
pub fn silverman_bandwidth(x: &[f64]) -> Result<f64> {
    let s = check_spread(x)?;
    Ok(1.06 * s * (x.len() as f64).powf(-0.2))
}

/// Rule-of-thumb bandwidth shrunk at rate `n^{-2/7}` instead of `n^{-1/5}`.
///
/// The plug-in regression that consumes `Ê(Z|A)` is sensitive to the
/// kernel smoothing bias, which is `O(h²)`; at this rate the bias is
/// `o(n^{-1/2})` while the uniform error stays `o(n^{-1/4})`.
pub fn undersmoothed_bandwidth(x: &[f64]) -> Result<f64> {
    let s = check_spread(x)?;
    Ok(1.06 * s * (x.len() as f64).powf(-2.0 / 7.0))
}

/// A Nadaraya–Watson regression of `y_train` on `x_train`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    x_train: Vec<f64>,
    y_train: Vec<f64>,
    bandwidth: f64,
}

impl KernelFit {
    pub fn new(x_train: Vec<f64>, y_train: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if x_train.len() != y_train.len() {
            return Err(Error::InvalidConfig(format!(
                "kernel fit needs equal lengths, got {} and {}",
                x_train.len(),
                y_train.len()
            )));
        }
        if x_train.len() < 2 {
            return Err(Error::InvalidConfig("kernel fit needs at least 2 points".into()));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {bandwidth}")));
        }
        Ok(Self { x_train, y_train, bandwidth })
    }

    pub fn x_train(&self) -> &[f64] {
        &self.x_train
    }

    pub fn y_train(&self) -> &[f64] {
        &self.y_train
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// Exact Nadaraya–Watson predictions at `x_eval`.
pub fn nw_regress(fit: &KernelFit, x_eval: &[f64]) -> Vec<f64> {
    nw_regress_with(fit, x_eval, Smoother::Exact)
}

pub fn nw_regress_with(fit: &KernelFit, x_eval: &[f64], smoother: Smoother) -> Vec<f64> {
    let ones = vec![1.0; fit.x_train.len()];
    kernel_ratio(&fit.x_train, &fit.y_train, &ones, fit.bandwidth, x_eval, smoother)
}

/// Evaluates `Σ K((x−xᵢ)/h) cᵢ / Σ K((x−xᵢ)/h) dᵢ` at each `x` in `x_eval`,
/// with nonnegative weights `d`. Plain Nadaraya–Watson is `c = y, d = 1`.
///
/// Exact evaluation rescales all weights by the weight of the nearest
/// training point, so the denominator cannot underflow as long as that
/// point carries positive `d`. Where it still vanishes the value of the
/// nearest training point is returned.
pub fn kernel_ratio(
    x_train: &[f64],
    c: &[f64],
    d: &[f64],
    h: f64,
    x_eval: &[f64],
    smoother: Smoother,
) -> Vec<f64> {
    debug_assert!(x_train.len() == c.len() && c.len() == d.len());
    // Sums run over c − r·d so that a constant ratio is reproduced exactly.
    let r = c.iter().zip(d).find(|(_, &di)| di > 0.0).map_or(0.0, |(ci, di)| ci / di);
    let centered: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci - r * di).collect();
    let sorted = SortedTrain::new(x_train);
    let range = sorted.hi() - sorted.lo();
    let exact = |x: f64| exact_ratio(&sorted, x_train, &centered, d, h, x).map_or_else(
        |near| c[near] / d[near],
        |v| r + v,
    );
    if smoother.use_binned(x_train.len(), x_eval.len(), range, h) {
        let sums = BinnedSums::new(x_train, &centered, d, h);
        x_eval.iter().map(|&x| sums.ratio(x).map_or_else(|| exact(x), |v| r + v)).collect()
    } else {
        x_eval.iter().map(|&x| exact(x)).collect()
    }
}

/// [`kernel_ratio`] at every training point, leaving that point out of both
/// sums. Where the remaining mass vanishes the full ratio is used instead.
pub fn kernel_ratio_loo(x_train: &[f64], c: &[f64], d: &[f64], h: f64, smoother: Smoother) -> Vec<f64> {
    let n = x_train.len();
    let r = c.iter().zip(d).find(|(_, &di)| di > 0.0).map_or(0.0, |(ci, di)| ci / di);
    let centered: Vec<f64> = c.iter().zip(d).map(|(ci, di)| ci - r * di).collect();
    let sorted = SortedTrain::new(x_train);
    let range = sorted.hi() - sorted.lo();
    let full = kernel_ratio(x_train, c, d, h, x_train, smoother);
    if smoother.use_binned(n, n, range, h) {
        let sums = BinnedSums::new(x_train, &centered, d, h);
        (0..n)
            .map(|i| match sums.sums(x_train[i]) {
                Some((num, den)) => {
                    let den = den - d[i];
                    if den > MIN_LOO_MASS * d.iter().sum::<f64>().max(f64::MIN_POSITIVE) {
                        r + (num - centered[i]) / den
                    } else {
                        full[i]
                    }
                }
                None => full[i],
            })
            .collect()
    } else {
        let inv_h = 1.0 / h;
        (0..n)
            .map(|i| {
                let x = x_train[i];
                let shift = x_train
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &xj)| ((x - xj) * inv_h).powi(2))
                    .fold(f64::INFINITY, f64::min);
                let (mut num, mut den) = (0.0, 0.0);
                for j in (0..n).filter(|&j| j != i) {
                    let u = (x - x_train[j]) * inv_h;
                    let w = (-0.5 * (u * u - shift)).exp();
                    num += w * centered[j];
                    den += w * d[j];
                }
                if den > 0.0 && den.is_finite() {
                    r + num / den
                } else {
                    full[i]
                }
            })
            .collect()
    }
}

/// Binned leave-one-out denominators below this fraction of the total mass
/// are too inaccurate after subtracting the own weight.
const MIN_LOO_MASS: f64 = 1e-6;

/// Training abscissae in ascending order, for nearest-point lookups.
struct SortedTrain {
    order: Vec<usize>,
    xs: Vec<f64>,
}

impl SortedTrain {
    fn new(x: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let xs = order.iter().map(|&i| x[i]).collect();
        Self { order, xs }
    }

    fn lo(&self) -> f64 {
        self.xs[0]
    }

    fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    /// Index (into the original order) of the training point nearest `x`;
    /// ties go to the smaller abscissa.
    fn nearest(&self, x: f64) -> usize {
        let pos = self.xs.partition_point(|&v| v < x);
        let k = if pos == 0 {
            0
        } else if pos == self.xs.len() {
            pos - 1
        } else if (x - self.xs[pos - 1]) <= (self.xs[pos] - x) {
            pos - 1
        } else {
            pos
        };
        self.order[k]
    }
}

/// `Err(nearest)` when the denominator vanishes.
fn exact_ratio(
    sorted: &SortedTrain,
    x_train: &[f64],
    c: &[f64],
    d: &[f64],
    h: f64,
    x: f64,
) -> Result<f64, usize> {
    let near = sorted.nearest(x);
    let inv_h = 1.0 / h;
    let u0 = (x - x_train[near]) * inv_h;
    let shift = u0 * u0;
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &ci), &di) in x_train.iter().zip(c).zip(d) {
        let u = (x - xi) * inv_h;
        let w = (-0.5 * (u * u - shift)).exp();
        num += w * ci;
        den += w * di;
    }
    if den > 0.0 && den.is_finite() {
        Ok(num / den)
    } else {
        Err(near)
    }
}

/// Leave-one-out cross-validated bandwidth for Nadaraya–Watson regression.
///
/// Grid points for which some observation has no effective neighbours are
/// skipped. Near-ties (within `1e-12` of the mean squared response) resolve
/// to the smaller bandwidth.
pub fn loocv_bandwidth(x: &[f64], y: &[f64], grid: &[f64]) -> Result<f64> {
    if grid.is_empty() || grid.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidConfig("bandwidth grid must be nonempty and positive".into()));
    }
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::CvDegenerate);
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let tol = 1e-12 * (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64);

    let mut best: Option<(f64, f64)> = None;
    for &h in &grid {
        let Some(err) = loo_error(x, y, h) else { continue };
        match best {
            Some((_, e)) if err >= e - tol => {}
            _ => best = Some((h, err)),
        }
    }
    best.map(|(h, _)| h).ok_or(Error::CvDegenerate)
}

fn loo_error(x: &[f64], y: &[f64], h: f64) -> Option<f64> {
    let inv_h = 1.0 / h;
    let mut sse = 0.0;
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &yj)) in x.iter().zip(y).enumerate() {
            if i == j {
                continue;
            }
            let u = (xi - xj) * inv_h;
            let w = (-0.5 * u * u).exp();
            num += w * yj;
            den += w;
        }
        if !(den > 0.0) {
            return None;
        }
        let r = yi - num / den;
        sse += r * r;
    }
    Some(sse / x.len() as f64)
}

/// Gaussian kernel density estimate at each point of `x_eval`.
pub fn kde_univariate(x_train: &[f64], bandwidth: f64, x_eval: &[f64]) -> Vec<f64> {
    let inv_h = 1.0 / bandwidth;
    let norm = INV_SQRT_2PI / (x_train.len() as f64 * bandwidth);
    x_eval
        .iter()
        .map(|&x| {
            let s: f64 = x_train
                .iter()
                .map(|&xi| {
                    let u = (x - xi) * inv_h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            norm * s
        })
        .collect()
}

/// Trapezoid rule over an ascending grid.
pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2)
        .zip(f.windows(2))
        .map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1]))
        .sum()
}

/// Trapezoid weights `τ` such that `Σ τ_g f(x_g)` equals [`trapezoid`].
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for g in 0..n.saturating_sub(1) {
        let half = 0.5 * (x[g + 1] - x[g]);
        w[g] += half;
        w[g + 1] += half;
    }
    w
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}
