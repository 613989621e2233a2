//! Bootstrap and plug-in asymptotic inference for `α̂`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::BasisSpec;
use crate::data::{validate_two_sample_dataset, PrimaryRow, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::estimator::{estimate_unchecked, evaluate_control_projection, ControlProjection, EstimatorConfig};
use crate::numdiff;
use crate::rng;
use crate::stats;

pub const QUANTILE_LEVELS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// Largest fraction of degenerate replicates tolerated before giving up.
pub const MAX_FAILED_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiType {
    #[default]
    Percentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub seed: u64,
    #[serde(default)]
    pub ci_type: CiType,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replicates: 500, level: 0.95, seed: 0, ci_type: CiType::Percentile }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("bootstrap replicates must be at least 1".into()));
        }
        validate_level(self.level)
    }
}

fn validate_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("confidence level must lie in (0, 1), got {level}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMethod {
    Bootstrap,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub method: InferenceMethod,
    pub level: f64,
    pub se: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    /// `p × p` variance estimate of `α̂`.
    pub variance: Vec<Vec<f64>>,
    /// Per coordinate, the draws' quantiles at [`QUANTILE_LEVELS`].
    pub quantiles: Option<Vec<[f64; 5]>>,
    /// Quantiles of the `ξ̂` draws.
    pub xi_quantiles: Option<[f64; 5]>,
    pub replicates: usize,
    pub n_failed: usize,
}

/// Independent nonparametric bootstrap of both samples. Every replicate
/// re-runs all three estimation steps, bandwidth selection included.
pub fn bootstrap_inference(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &BootstrapConfig,
    est_cfg: &EstimatorConfig,
) -> Result<InferenceReport> {
    bootstrap_with(ds, basis, cfg, |resample| {
        estimate_unchecked(resample, basis, est_cfg).map(|(r, _)| (r.alpha_hat, r.xi_hat))
    })
}

/// Bootstrap of an arbitrary two-sample estimator returning `(α̂, ξ̂)`.
/// Replicate `b` resamples `n₁` auxiliary and `n₂` primary rows with
/// replacement from the stream `(cfg.seed, b)`.
pub fn bootstrap_with<F>(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &BootstrapConfig,
    estimator: F,
) -> Result<InferenceReport>
where
    F: Fn(&TwoSampleDataset) -> Result<(Vec<f64>, f64)> + Sync,
{
    cfg.validate()?;
    validate_two_sample_dataset(ds, basis).into_result()?;
    let (n1, n2) = (ds.n1(), ds.n2());
    let draws: Vec<Result<Option<(Vec<f64>, f64)>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(cfg.seed, b as u64);
            let aux = (0..n1).map(|_| ds.auxiliary[rng.random_range(0..n1)]).collect();
            let primary = (0..n2).map(|_| ds.primary[rng.random_range(0..n2)]).collect();
            match estimator(&TwoSampleDataset::new(aux, primary)) {
                Ok(x) => Ok(Some(x)),
                Err(e) if e.is_degenerate() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut alphas = Vec::with_capacity(cfg.replicates);
    for d in draws {
        if let Some(x) = d? {
            alphas.push(x);
        }
    }
    let n_failed = cfg.replicates - alphas.len();
    if n_failed as f64 > MAX_FAILED_FRACTION * cfg.replicates as f64 || alphas.len() < 2 {
        return Err(Error::BootstrapUnstable { failed: n_failed, total: cfg.replicates });
    }

    let p = basis.dim();
    let tail = (1.0 - cfg.level) / 2.0;
    let summarize = |sorted: &[f64]| QUANTILE_LEVELS.map(|q| stats::quantile_sorted(sorted, q));
    let mut se = Vec::with_capacity(p);
    let mut lo = Vec::with_capacity(p);
    let mut hi = Vec::with_capacity(p);
    let mut quantiles = Vec::with_capacity(p);
    for k in 0..p {
        let col = stats::sorted_copy(&alphas.iter().map(|(a, _)| a[k]).collect::<Vec<_>>());
        se.push(stats::sd(&col));
        lo.push(stats::quantile_sorted(&col, tail));
        hi.push(stats::quantile_sorted(&col, 1.0 - tail));
        quantiles.push(summarize(&col));
    }
    // Off-diagonal terms need the draws paired by replicate.
    let mut variance = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            variance[i][j] = if i == j {
                se[i] * se[i]
            } else {
                paired_covariance(&alphas, i, j)
            };
        }
    }
    let xi = stats::sorted_copy(&alphas.iter().map(|(_, x)| *x).collect::<Vec<_>>());
    Ok(InferenceReport {
        method: InferenceMethod::Bootstrap,
        level: cfg.level,
        se,
        ci_lower: lo,
        ci_upper: hi,
        variance,
        quantiles: Some(quantiles),
        xi_quantiles: Some(summarize(&xi)),
        replicates: cfg.replicates,
        n_failed,
    })
}

fn paired_covariance(draws: &[(Vec<f64>, f64)], i: usize, j: usize) -> f64 {
    let n = draws.len() as f64;
    let mi = draws.iter().map(|(a, _)| a[i]).sum::<f64>() / n;
    let mj = draws.iter().map(|(a, _)| a[j]).sum::<f64>() / n;
    draws.iter().map(|(a, _)| (a[i] - mi) * (a[j] - mj)).sum::<f64>() / (n - 1.0)
}

/// Length of the moment vector for a basis of dimension `p`.
pub fn moment_dim(p: usize) -> usize {
    p * p + p + 1
}

fn push_moments(g: &[f64], c: f64, out: &mut Vec<f64>) {
    for j in 0..g.len() {
        for i in 0..g.len() {
            out.push(g[i] * g[j]);
        }
    }
    out.extend(g.iter().map(|gk| gk * c));
    out.push(c * c);
}

/// Per-row moments `X = [vec(g gᵀ), g·Ĉ, Ĉ²]` (column-major `vec`) over the
/// primary treatments, and their mean `μ`.
pub fn moment_vector(
    primary_a: &[f64],
    cp: &ControlProjection,
    basis: &BasisSpec,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let c_hat = evaluate_control_projection(cp, primary_a);
    moment_rows(primary_a, &c_hat, basis)
}

/// [`moment_vector`] with `Ĉ` already evaluated.
pub fn moment_rows(a: &[f64], c_hat: &[f64], basis: &BasisSpec) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = basis.dim();
    let mut g = vec![0.0; p];
    let rows: Vec<Vec<f64>> = a
        .iter()
        .zip(c_hat)
        .map(|(&ai, &ci)| {
            basis.eval_into(ai, &mut g);
            let mut x = Vec::with_capacity(moment_dim(p));
            push_moments(&g, ci, &mut x);
            x
        })
        .collect();
    (column_means(&rows, moment_dim(p)), rows)
}

fn column_means(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut mu = vec![0.0; d];
    for r in rows {
        for (m, v) in mu.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = rows.len().max(1) as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    mu
}

/// Reassembles the `(p+1) × (p+1)` second-moment matrix of `(g, C)` from a
/// moment vector. Entries of `vec(g gᵀ)` fill one cell each; the cross
/// terms fill both symmetric cells.
pub fn mu_to_gram(mu: &[f64], p: usize) -> DMatrix<f64> {
    assert_eq!(mu.len(), moment_dim(p), "moment vector length");
    let mut m = DMatrix::zeros(p + 1, p + 1);
    for j in 0..p {
        for i in 0..p {
            m[(i, j)] = mu[j * p + i];
        }
    }
    for k in 0..p {
        m[(k, p)] = mu[p * p + k];
        m[(p, k)] = mu[p * p + k];
    }
    m[(p, p)] = mu[p * p + p];
    m
}

/// Inverse of [`mu_to_gram`] on symmetric matrices.
pub fn gram_to_mu(m: &DMatrix<f64>) -> Vec<f64> {
    let p = m.nrows() - 1;
    let mut mu = Vec::with_capacity(moment_dim(p));
    for j in 0..p {
        for i in 0..p {
            mu.push(m[(i, j)]);
        }
    }
    mu.extend((0..p).map(|k| m[(k, p)]));
    mu.push(m[(p, p)]);
    mu
}

/// `D = M⁻¹` for the moment matrix encoded by `mu`.
pub fn d_matrix(mu: &[f64], p: usize) -> Result<DMatrix<f64>> {
    mu_to_gram(mu, p).try_inverse().ok_or(Error::AssumptionOneViolated)
}

/// `α(μ) = D₁₁(μ) E{gY} + D₁₂(μ) E{CY}`.
pub fn alpha_of_mu(mu: &[f64], p: usize, gy: &[f64], cy: f64) -> Result<Vec<f64>> {
    let d = d_matrix(mu, p)?;
    Ok((0..p)
        .map(|i| (0..p).map(|j| d[(i, j)] * gy[j]).sum::<f64>() + d[(i, p)] * cy)
        .collect())
}

/// Plug-in variance of `α̂`: the sample covariance of the influence terms
/// `D₁₁gY + D₁₂CY + (∂α/∂μ)X`, divided by `n₂`. The intercept is profiled
/// out by centering `g`, `Ĉ` and `Y` at their primary-sample means.
pub fn asymptotic_variance(
    primary: &[PrimaryRow],
    cp: &ControlProjection,
    basis: &BasisSpec,
) -> Result<DMatrix<f64>> {
    let p = basis.dim();
    let n = primary.len();
    if n < p + 3 {
        return Err(Error::VarianceEstimationFailed(format!(
            "need at least {} primary rows, got {n}",
            p + 3
        )));
    }
    let a: Vec<f64> = primary.iter().map(|r| r.a).collect();
    let c_hat = evaluate_control_projection(cp, &a);

    let mut g_rows: Vec<Vec<f64>> = a.iter().map(|&ai| crate::basis::eval_basis(basis, ai)).collect();
    let mut c = c_hat;
    let mut y: Vec<f64> = primary.iter().map(|r| r.y).collect();
    for k in 0..p {
        let m = g_rows.iter().map(|g| g[k]).sum::<f64>() / n as f64;
        g_rows.iter_mut().for_each(|g| g[k] -= m);
    }
    let mc = stats::mean(&c);
    c.iter_mut().for_each(|v| *v -= mc);
    let my = stats::mean(&y);
    y.iter_mut().for_each(|v| *v -= my);

    let rows: Vec<Vec<f64>> = g_rows
        .iter()
        .zip(&c)
        .map(|(g, &ci)| {
            let mut x = Vec::with_capacity(moment_dim(p));
            push_moments(g, ci, &mut x);
            x
        })
        .collect();
    let mu = column_means(&rows, moment_dim(p));
    let nf = n as f64;
    let gy: Vec<f64> = (0..p).map(|k| g_rows.iter().zip(&y).map(|(g, yi)| g[k] * yi).sum::<f64>() / nf).collect();
    let cy = c.iter().zip(&y).map(|(ci, yi)| ci * yi).sum::<f64>() / nf;

    let d = d_matrix(&mu, p)?;
    let jac = numdiff::central_difference_jacobian(
        |m| alpha_of_mu(m, p, &gy, cy),
        &mu,
        &numdiff::default_steps(&mu),
    )?;

    let psi: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            (0..p)
                .map(|i| {
                    let direct = (0..p).map(|j| d[(i, j)] * g_rows[r][j]).sum::<f64>() * y[r]
                        + d[(i, p)] * c[r] * y[r];
                    let chain = jac[i].iter().zip(&rows[r]).map(|(jv, xv)| jv * xv).sum::<f64>();
                    direct + chain
                })
                .collect()
        })
        .collect();
    let psi_mean = column_means(&psi, p);
    let mut v = DMatrix::zeros(p, p);
    for row in &psi {
        for i in 0..p {
            for j in 0..p {
                v[(i, j)] += (row[i] - psi_mean[i]) * (row[j] - psi_mean[j]);
            }
        }
    }
    v /= nf - 1.0;
    let v = (&v + v.transpose()) * 0.5;
    let eig = v.clone().symmetric_eigenvalues();
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if eig.iter().any(|e| !e.is_finite() || *e < -1e-8 * scale.max(1.0)) {
        return Err(Error::VarianceEstimationFailed("variance matrix is not positive semidefinite".into()));
    }
    Ok(v / nf)
}

/// Normal-approximation interval from [`asymptotic_variance`].
pub fn asymptotic_inference(
    primary: &[PrimaryRow],
    cp: &ControlProjection,
    basis: &BasisSpec,
    alpha_hat: &[f64],
    level: f64,
) -> Result<InferenceReport> {
    validate_level(level)?;
    let v = asymptotic_variance(primary, cp, basis)?;
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let p = basis.dim();
    let se: Vec<f64> = (0..p).map(|k| v[(k, k)].max(0.0).sqrt()).collect();
    Ok(InferenceReport {
        method: InferenceMethod::Asymptotic,
        level,
        ci_lower: alpha_hat.iter().zip(&se).map(|(a, s)| a - z * s).collect(),
        ci_upper: alpha_hat.iter().zip(&se).map(|(a, s)| a + z * s).collect(),
        se,
        variance: (0..p).map(|i| (0..p).map(|j| v[(i, j)]).collect()).collect(),
        quantiles: None,
        xi_quantiles: None,
        replicates: 0,
        n_failed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AuxiliaryRow;
    use crate::estimator::{fit_control_projection, fit_treatment_model};

    fn projection() -> ControlProjection {
        let aux: Vec<AuxiliaryRow> = (0..200)
            .map(|i| {
                let z = (i % 2) as f64;
                AuxiliaryRow { z, a: 3.0 * z + 0.5 * (i as f64 * 0.37).sin() }
            })
            .collect();
        let tm = fit_treatment_model(&aux).unwrap();
        fit_control_projection(&aux, tm, &EstimatorConfig::default()).unwrap()
    }

    #[test]
    fn moment_row_scalar() {
        let mut out = Vec::new();
        push_moments(&[2.0], 3.0, &mut out);
        assert_eq!(out, vec![4.0, 6.0, 9.0]);
    }

    #[test]
    fn moment_row_two_terms() {
        let basis = BasisSpec::parse_list("identity,power:2").unwrap();
        let (mu, rows) = moment_rows(&[1.0], &[1.0], &basis);
        assert_eq!(rows, vec![vec![1.0; 7]]);
        assert_eq!(mu, vec![1.0; 7]);
    }

    #[test]
    fn layout_round_trip() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -1.0, 0.3, 5.0, 0.7, -1.0, 0.7, 4.0]);
        assert_eq!(mu_to_gram(&gram_to_mu(&m), 2), m);
    }

    #[test]
    fn exact_fit_has_zero_variance() {
        let cp = projection();
        let primary: Vec<PrimaryRow> = (0..60)
            .map(|i| {
                let a = -1.5 + i as f64 * 0.06;
                PrimaryRow { a, y: 0.5 + 2.0 * a }
            })
            .collect();
        let v = asymptotic_variance(&primary, &cp, &BasisSpec::identity()).unwrap();
        assert!(v[(0, 0)].abs() <= 1e-10, "{}", v[(0, 0)]);
    }

    #[test]
    fn singular_gram_rejected() {
        let cp = projection();
        let primary = vec![PrimaryRow { a: 0.3, y: 1.0 }; 10];
        assert!(asymptotic_variance(&primary, &cp, &BasisSpec::identity()).is_err());
    }
}
