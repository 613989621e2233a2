//! Linearly binned kernel sums.
//!
//! Training mass is split between the two nearest nodes of a regular grid,
//! convolved with the sampled Gaussian kernel, and read back by linear
//! interpolation. Node spacing is at most `h / NODES_PER_BANDWIDTH`, which
//! keeps the relative error of each sum near `1e-4` of the kernel scale.

/// Grid nodes per bandwidth.
const NODES_PER_BANDWIDTH: f64 = 20.0;
/// Kernel truncation radius in bandwidths; `exp(-8.5²/2) ≈ 2e-16`.
const TAU: f64 = 8.5;
const MAX_NODES: usize = 1 << 16;
/// Binned values are trusted only where the local denominator mass is at
/// least this fraction of the total.
const MIN_RELATIVE_MASS: f64 = 1e-8;

/// Number of nodes needed to resolve bandwidth `h` over `range`, or `None`
/// if that exceeds the grid budget.
pub(super) fn node_count(range: f64, h: f64) -> Option<usize> {
    if !(range > 0.0 && h > 0.0) {
        return None;
    }
    let n = (range / h * NODES_PER_BANDWIDTH).ceil() + 1.0;
    (n.is_finite() && n <= MAX_NODES as f64).then(|| (n as usize).max(2))
}

/// Kernel-weighted numerator and denominator sums on a regular grid.
#[derive(Debug, Clone)]
pub struct BinnedSums {
    lo: f64,
    hi: f64,
    delta: f64,
    num: Vec<f64>,
    den: Vec<f64>,
    min_den: f64,
}

impl BinnedSums {
    /// Panics if `x_train` has no spread or the bandwidth cannot be resolved;
    /// callers check [`node_count`] first.
    pub fn new(x_train: &[f64], c: &[f64], d: &[f64], h: f64) -> Self {
        let (lo, hi) = x_train
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &x| (l.min(x), u.max(x)));
        let m = node_count(hi - lo, h).expect("bandwidth not resolvable on a grid");
        let delta = (hi - lo) / (m - 1) as f64;

        let mut cb = vec![0.0; m];
        let mut db = vec![0.0; m];
        for ((&x, &ci), &di) in x_train.iter().zip(c).zip(d) {
            let (k, f) = locate(lo, delta, m, x);
            cb[k] += (1.0 - f) * ci;
            cb[k + 1] += f * ci;
            db[k] += (1.0 - f) * di;
            db[k + 1] += f * di;
        }

        let half = ((TAU * h / delta).ceil() as usize).min(m - 1);
        let kernel: Vec<f64> = (0..=2 * half)
            .map(|l| {
                let u = (l as f64 - half as f64) * delta / h;
                (-0.5 * u * u).exp()
            })
            .collect();

        let mut num = vec![0.0; m];
        let mut den = vec![0.0; m];
        for k in 0..m {
            let (ck, dk) = (cb[k], db[k]);
            if ck == 0.0 && dk == 0.0 {
                continue;
            }
            let start = k.saturating_sub(half);
            let end = (k + half).min(m - 1);
            let kw = &kernel[start + half - k..=end + half - k];
            for ((n, dd), w) in num[start..=end].iter_mut().zip(&mut den[start..=end]).zip(kw) {
                *n += w * ck;
                *dd += w * dk;
            }
        }
        let total: f64 = d.iter().sum();
        Self { lo, hi, delta, num, den, min_den: MIN_RELATIVE_MASS * total }
    }

    /// Interpolated `num(x) / den(x)`, or `None` outside the grid or where
    /// the local mass is too small for the binned sums to be reliable.
    pub fn ratio(&self, x: f64) -> Option<f64> {
        self.sums(x).map(|(n, d)| n / d)
    }

    /// Interpolated `(num(x), den(x))` with the unnormalized kernel
    /// `exp(−u²/2)`, under the same reliability rule as [`Self::ratio`].
    pub fn sums(&self, x: f64) -> Option<(f64, f64)> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let (k, f) = locate(self.lo, self.delta, self.num.len(), x);
        let den = (1.0 - f) * self.den[k] + f * self.den[k + 1];
        if !(den > self.min_den) {
            return None;
        }
        Some(((1.0 - f) * self.num[k] + f * self.num[k + 1], den))
    }
}

#[inline]
fn locate(lo: f64, delta: f64, m: usize, x: f64) -> (usize, f64) {
    let pos = ((x - lo) / delta).max(0.0);
    let k = (pos.floor() as usize).min(m - 2);
    (k, (pos - k as f64).clamp(0.0, 1.0))
}
