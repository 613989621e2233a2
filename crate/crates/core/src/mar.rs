//! Estimation when selection into the primary sample depends on the
//! treatment, `R ⊥ (Z, Y) | A`.
//!
//! Under this assumption `f(z | a, R = 0) = f(z | a)`, so
//!
//! ```text
//! E(A | Z = z) = ∫ a f(z|a) f(a) da / ∫ f(z|a) f(a) da
//! C(A)         = A − E{E(A | Z) | A, R = 0}
//! α            = D₁₁ E{g(A) E(Y|A,R=1)} + D₁₂ E{C(A) E(Y|A,R=1)}
//! ```
//!
//! with outer expectations and `f(a)` taken over the pooled treatments.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::data::{validate_two_sample_dataset, DiagnosticsBlock, EstimateReport, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::estimator::h_columns;
use crate::inference::{bootstrap_with, BootstrapConfig, InferenceReport};
use crate::linalg::{self, RankDeficient};
use crate::nonparam::{self, gaussian_kernel, KernelFit, Smoother};

/// Smallest instrument density (or probability) treated as estimable.
pub const MIN_INSTRUMENT_DENSITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarConfig {
    /// Quadrature nodes for the integrals over `a`.
    pub a_grid_size: usize,
    /// Treat `Z` as a `{0, 1}` indicator instead of smoothing over it.
    pub z_is_binary: bool,
    /// Kernel density bandwidth of the pooled `f(a)`.
    pub density_bandwidth: Option<f64>,
    /// Bandwidth of the auxiliary smoothing over `A` inside `f(z|a)`.
    pub treatment_bandwidth: Option<f64>,
    /// Bandwidth over `Z` for continuous instruments.
    pub instrument_bandwidth: Option<f64>,
    /// Bandwidth of `E{m̃(Z) | A, R = 0}`.
    pub projection_bandwidth: Option<f64>,
    /// Bandwidth of `E(Y | A, R = 1)`.
    pub outcome_bandwidth: Option<f64>,
    pub smoother: Smoother,
}

impl Default for MarConfig {
    fn default() -> Self {
        Self {
            a_grid_size: 512,
            z_is_binary: false,
            density_bandwidth: None,
            treatment_bandwidth: None,
            instrument_bandwidth: None,
            projection_bandwidth: None,
            outcome_bandwidth: None,
            smoother: Smoother::Auto,
        }
    }
}

impl MarConfig {
    /// Default configuration, with `z_is_binary` set when every auxiliary
    /// instrument value is 0 or 1.
    pub fn for_dataset(ds: &TwoSampleDataset) -> Self {
        Self { z_is_binary: is_binary(ds), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_grid_size < 16 {
            return Err(Error::InvalidConfig(format!(
                "a_grid_size must be at least 16, got {}",
                self.a_grid_size
            )));
        }
        for h in [
            self.density_bandwidth,
            self.treatment_bandwidth,
            self.instrument_bandwidth,
            self.projection_bandwidth,
            self.outcome_bandwidth,
        ]
        .into_iter()
        .flatten()
        {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

fn is_binary(ds: &TwoSampleDataset) -> bool {
    ds.auxiliary.iter().all(|r| r.z == 0.0 || r.z == 1.0)
}

fn bandwidth_or(h: Option<f64>, x: &[f64], rule: fn(&[f64]) -> Result<f64>) -> Result<f64> {
    match h {
        Some(h) => Ok(h),
        None => rule(x),
    }
}

/// Fitted `z ↦ Ê(A | Z = z)`.
///
/// Both the numerator and the denominator are kernel sums over the
/// auxiliary instruments, `Σⱼ K_z(z − zⱼ) cⱼ` and `Σⱼ K_z(z − zⱼ) dⱼ`, with
/// `cⱼ = ∫ a wⱼ(a) f̂(a) da` and `dⱼ = ∫ wⱼ(a) f̂(a) da`, where `wⱼ(a)` are the
/// Nadaraya–Watson weights of the auxiliary treatments. For a binary
/// instrument `K_z` is the indicator of `zⱼ = z`.
#[derive(Debug, Clone)]
pub struct ConditionalTreatmentMean {
    z_train: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    /// `None` for a binary instrument.
    instrument_bandwidth: Option<f64>,
    smoother: Smoother,
}

impl ConditionalTreatmentMean {
    /// `f̂(z)`: a density for continuous `Z`, a probability for binary `Z`.
    pub fn instrument_marginal(&self, z: f64) -> f64 {
        match self.instrument_bandwidth {
            None => self.z_train.iter().zip(&self.d).filter(|(&zj, _)| zj == z).map(|(_, d)| d).sum(),
            Some(h) => {
                self.z_train
                    .iter()
                    .zip(&self.d)
                    .map(|(&zj, dj)| gaussian_kernel((z - zj) / h) * dj)
                    .sum::<f64>()
                    / h
            }
        }
    }

    /// `Ê(A | Z = z)` at each requested `z`.
    pub fn evaluate(&self, z: &[f64]) -> Result<Vec<f64>> {
        if let Some(&bad) = z.iter().find(|&&zi| !(self.instrument_marginal(zi) >= MIN_INSTRUMENT_DENSITY)) {
            return Err(Error::InstrumentOutOfRange { z: bad });
        }
        Ok(self.evaluate_unchecked(z))
    }

    /// `Ê(A | Z = zᵢ)` at every auxiliary row, leaving row `i` out so that
    /// its own treatment does not leak into the fitted value.
    fn evaluate_at_training_points(&self) -> Vec<f64> {
        match self.instrument_bandwidth {
            None => {
                let (mut c, mut d) = ([0.0; 2], [0.0; 2]);
                for ((&zj, cj), dj) in self.z_train.iter().zip(&self.c).zip(&self.d) {
                    let k = usize::from(zj == 1.0);
                    c[k] += cj;
                    d[k] += dj;
                }
                self.z_train
                    .iter()
                    .zip(self.c.iter().zip(&self.d))
                    .map(|(&zi, (ci, di))| {
                        let k = usize::from(zi == 1.0);
                        let den = d[k] - di;
                        if den > 0.0 { (c[k] - ci) / den } else { c[k] / d[k] }
                    })
                    .collect()
            }
            Some(h) => nonparam::kernel_ratio_loo(&self.z_train, &self.c, &self.d, h, self.smoother),
        }
    }

    fn evaluate_unchecked(&self, z: &[f64]) -> Vec<f64> {
        match self.instrument_bandwidth {
            None => {
                let (mut c, mut d) = ([0.0; 2], [0.0; 2]);
                for ((&zj, cj), dj) in self.z_train.iter().zip(&self.c).zip(&self.d) {
                    let k = usize::from(zj == 1.0);
                    c[k] += cj;
                    d[k] += dj;
                }
                z.iter().map(|&zi| {
                    let k = usize::from(zi == 1.0);
                    c[k] / d[k]
                }).collect()
            }
            Some(h) => nonparam::kernel_ratio(&self.z_train, &self.c, &self.d, h, z, self.smoother),
        }
    }
}

/// Fits `Ê(A | Z = ·)` from the auxiliary `(Z, A)` pairs and the pooled
/// treatment density.
pub fn fit_e_a_given_z(ds: &TwoSampleDataset, cfg: &MarConfig) -> Result<ConditionalTreatmentMean> {
    cfg.validate()?;
    if cfg.z_is_binary && !is_binary(ds) {
        return Err(Error::InvalidConfig("z_is_binary set but the instrument takes values other than 0 and 1".into()));
    }
    let pooled = ds.pooled_treatment();
    let aux_a: Vec<f64> = ds.auxiliary.iter().map(|r| r.a).collect();
    let z_train: Vec<f64> = ds.auxiliary.iter().map(|r| r.z).collect();

    let h_f = bandwidth_or(cfg.density_bandwidth, &pooled, nonparam::silverman_bandwidth)?;
    let h_w = bandwidth_or(cfg.treatment_bandwidth, &aux_a, nonparam::undersmoothed_bandwidth)?;
    let (lo, hi) = min_max(&pooled);
    let grid = nonparam::linspace(lo - 3.0 * h_f, hi + 3.0 * h_f, cfg.a_grid_size);
    let tau = nonparam::trapezoid_weights(&grid);
    let f_a = nonparam::kde_univariate(&pooled, h_f, &grid);

    let n1 = aux_a.len();
    let (mut c, mut d) = (vec![0.0; n1], vec![0.0; n1]);
    let mut k = vec![0.0; n1];
    let inv_h = 1.0 / h_w;
    for ((&ag, &tg), &fg) in grid.iter().zip(&tau).zip(&f_a) {
        let mass = tg * fg;
        if mass <= 0.0 {
            continue;
        }
        // Shift exponents by the nearest point so the weights never underflow.
        let u_min = aux_a.iter().map(|&aj| ((ag - aj) * inv_h).abs()).fold(f64::INFINITY, f64::min);
        let mut s = 0.0;
        for (kj, &aj) in k.iter_mut().zip(&aux_a) {
            let u = (ag - aj) * inv_h;
            *kj = (-0.5 * (u * u - u_min * u_min)).exp();
            s += *kj;
        }
        let scale = mass / s;
        for ((cj, dj), kj) in c.iter_mut().zip(d.iter_mut()).zip(&k) {
            let w = kj * scale;
            *cj += ag * w;
            *dj += w;
        }
    }

    let instrument_bandwidth = if cfg.z_is_binary {
        None
    } else {
        Some(bandwidth_or(cfg.instrument_bandwidth, &z_train, nonparam::silverman_bandwidth)?)
    };
    Ok(ConditionalTreatmentMean { z_train, c, d, instrument_bandwidth, smoother: cfg.smoother })
}

/// `Ê(A | Z = z)` at each requested `z`.
pub fn estimate_e_a_given_z(ds: &TwoSampleDataset, cfg: &MarConfig, z: &[f64]) -> Result<Vec<f64>> {
    fit_e_a_given_z(ds, cfg)?.evaluate(z)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)))
}

fn clamped(x: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    x.iter().map(|v| v.clamp(lo, hi)).collect()
}

/// Regresses `Ê(Y | A, R = 1)` on `(1, g(A), C̃(A))` over the pooled
/// treatments, with `C̃(A) = A − Ê{Ê(A|Z) | A, R = 0}`.
pub fn estimate_alpha_mar(ds: &TwoSampleDataset, basis: &BasisSpec, cfg: &MarConfig) -> Result<EstimateReport> {
    validate_two_sample_dataset(ds, basis).into_result()?;
    let fit = fit_e_a_given_z(ds, cfg)?;
    let m_tilde = fit.evaluate_at_training_points();

    let pooled = ds.pooled_treatment();
    let aux_a: Vec<f64> = ds.auxiliary.iter().map(|r| r.a).collect();
    let (aux_lo, aux_hi) = min_max(&aux_a);
    if !(aux_lo < aux_hi) {
        return Err(Error::ZeroSpread);
    }
    let h_c = bandwidth_or(cfg.projection_bandwidth, &aux_a, nonparam::undersmoothed_bandwidth)?;
    let proj = KernelFit::new(aux_a, m_tilde, h_c)?;
    let e_m = nonparam::nw_regress_with(&proj, &clamped(&pooled, aux_lo, aux_hi), cfg.smoother);
    let c_tilde: Vec<f64> = pooled.iter().zip(&e_m).map(|(a, m)| a - m).collect();

    let prim_a: Vec<f64> = ds.primary.iter().map(|r| r.a).collect();
    let prim_y: Vec<f64> = ds.primary.iter().map(|r| r.y).collect();
    let (p_lo, p_hi) = min_max(&prim_a);
    let h_y = bandwidth_or(cfg.outcome_bandwidth, &prim_a, nonparam::undersmoothed_bandwidth)?;
    let outcome = KernelFit::new(prim_a.clone(), prim_y, h_y)?;
    let y_tilde = nonparam::nw_regress_with(&outcome, &clamped(&pooled, p_lo, p_hi), cfg.smoother);

    let p = basis.dim();
    let cols = h_columns(&pooled, basis, &c_tilde);
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let x = linalg::design_from_columns(&refs);
    let b = linalg::least_squares(&x, &y_tilde).map_err(|RankDeficient| Error::AssumptionOneViolated)?;
    let inside = prim_a.iter().filter(|&&a| a >= aux_lo && a <= aux_hi).count();
    Ok(EstimateReport {
        alpha_hat: b[1..=p].to_vec(),
        xi_hat: b[p + 1],
        intercept: b[0],
        variance: None,
        ci_lower: None,
        ci_upper: None,
        diagnostics: DiagnosticsBlock {
            gram_condition_number: linalg::gram_condition_number(&x),
            support_overlap_fraction: inside as f64 / prim_a.len() as f64,
            n1: ds.n1(),
            n2: ds.n2(),
            bandwidth_used: h_c,
        },
    })
}

/// Bootstrap of [`estimate_alpha_mar`].
pub fn bootstrap_mar(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &BootstrapConfig,
    mar_cfg: &MarConfig,
) -> Result<InferenceReport> {
    bootstrap_with(ds, basis, cfg, |resample| {
        estimate_alpha_mar(resample, basis, mar_cfg).map(|r| (r.alpha_hat, r.xi_hat))
    })
}
