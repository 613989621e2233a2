//! The three-step control-function-projection estimator.
//!
//! 1. Regress `A` on `(1, Z)` over the auxiliary sample to get `m̂(Z)`.
//! 2. Project the residual `A − m̂(Z)` onto functions of `A`; with a linear
//!    treatment model this is `Ĉ(A) = A − γ̂₀ − γ̂₁ Ê(Z|A)`, where `Ê(Z|A)`
//!    is a kernel regression over the auxiliary sample.
//! 3. Regress `Y` on `(1, g(A), Ĉ(A))` over the primary sample; the
//!    coefficients on `g(A)` estimate the causal parameter.
//!
//! Step 3 is the sample analogue of `α = D₁₁E{g(A)Y} + D₁₂E{C(A)Y}` with
//! `D = E{hhᵀ}⁻¹`, solved as one least-squares problem.

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::data::{
    has_spread, validate_two_sample_dataset, AuxiliaryRow, DiagnosticsBlock, EstimateReport,
    JointRow, PrimaryRow, TwoSampleDataset,
};
use crate::error::{Error, Result};
use crate::linalg::{self, RankDeficient};
use crate::nonparam::{self, KernelFit, Smoother};

/// How the bandwidth of `Ê(Z|A)` is chosen from the auxiliary treatments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum BandwidthRule {
    /// [`nonparam::undersmoothed_bandwidth`].
    #[default]
    Auto,
    /// [`nonparam::silverman_bandwidth`].
    Silverman,
    Fixed(f64),
    /// Leave-one-out cross-validation over an absolute grid; an empty grid
    /// means multiples `0.1, 0.2, …, 1.5` of the Silverman bandwidth.
    Loocv(Vec<f64>),
}

impl BandwidthRule {
    pub fn select(&self, a: &[f64], z: &[f64]) -> Result<f64> {
        match self {
            BandwidthRule::Auto => nonparam::undersmoothed_bandwidth(a),
            BandwidthRule::Silverman => nonparam::silverman_bandwidth(a),
            BandwidthRule::Fixed(h) => {
                if *h > 0.0 && h.is_finite() {
                    Ok(*h)
                } else {
                    Err(Error::InvalidConfig(format!("bandwidth must be positive, got {h}")))
                }
            }
            BandwidthRule::Loocv(grid) => {
                if grid.is_empty() {
                    let hs = nonparam::silverman_bandwidth(a)?;
                    let grid: Vec<f64> = (1..=15).map(|k| hs * 0.1 * k as f64).collect();
                    nonparam::loocv_bandwidth(a, z, &grid)
                } else {
                    nonparam::loocv_bandwidth(a, z, grid)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EstimatorConfig {
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default)]
    pub smoother: Smoother,
}

/// Linear treatment model `m(Z) = γ₀ + γ₁Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreatmentModel {
    pub gamma0: f64,
    pub gamma1: f64,
}

impl TreatmentModel {
    pub fn predict(&self, z: f64) -> f64 {
        self.gamma0 + self.gamma1 * z
    }
}

/// Fitted control function projection `Ĉ(·)`.
#[derive(Debug, Clone)]
pub struct ControlProjection {
    pub treatment_model: TreatmentModel,
    /// Kernel regression of `Z` on `A` over the auxiliary sample.
    pub ez_given_a: KernelFit,
    pub support_lo: f64,
    pub support_hi: f64,
    pub smoother: Smoother,
}

impl ControlProjection {
    pub fn bandwidth(&self) -> f64 {
        self.ez_given_a.bandwidth()
    }

    pub fn n1(&self) -> usize {
        self.ez_given_a.x_train().len()
    }

    /// Fraction of `a` inside the auxiliary treatment range.
    pub fn overlap_fraction(&self, a: &[f64]) -> f64 {
        if a.is_empty() {
            return 0.0;
        }
        let inside = a
            .iter()
            .filter(|&&v| v >= self.support_lo && v <= self.support_hi)
            .count();
        inside as f64 / a.len() as f64
    }
}

/// OLS of `A` on `(1, Z)` over the auxiliary rows.
pub fn fit_treatment_model(aux: &[AuxiliaryRow]) -> Result<TreatmentModel> {
    let n = aux.len();
    if n < 2 || !has_spread(aux.iter().map(|r| r.z)) {
        return Err(Error::DegenerateInstrument);
    }
    let nf = n as f64;
    let zbar = aux.iter().map(|r| r.z).sum::<f64>() / nf;
    let abar = aux.iter().map(|r| r.a).sum::<f64>() / nf;
    let (mut szz, mut sza) = (0.0, 0.0);
    for r in aux {
        let dz = r.z - zbar;
        szz += dz * dz;
        sza += dz * (r.a - abar);
    }
    if !(szz > 0.0) {
        return Err(Error::DegenerateInstrument);
    }
    let gamma1 = sza / szz;
    Ok(TreatmentModel { gamma0: abar - gamma1 * zbar, gamma1 })
}

/// Fits the kernel regression of `Z` on `A` behind `Ĉ(·)`. The bandwidth is
/// chosen from the auxiliary treatments.
pub fn fit_control_projection(
    aux: &[AuxiliaryRow],
    treatment_model: TreatmentModel,
    cfg: &EstimatorConfig,
) -> Result<ControlProjection> {
    let a: Vec<f64> = aux.iter().map(|r| r.a).collect();
    let z: Vec<f64> = aux.iter().map(|r| r.z).collect();
    let (lo, hi) = a
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &x| (l.min(x), u.max(x)));
    if !(lo < hi) {
        return Err(Error::ZeroSpread);
    }
    let h = cfg.bandwidth.select(&a, &z)?;
    Ok(ControlProjection {
        treatment_model,
        ez_given_a: KernelFit::new(a, z, h)?,
        support_lo: lo,
        support_hi: hi,
        smoother: cfg.smoother,
    })
}

/// `Ĉ(a) = a − γ̂₀ − γ̂₁ Ê(Z | clamp(a))`, where the kernel regression is
/// evaluated at `a` clamped to the auxiliary support.
pub fn evaluate_control_projection(cp: &ControlProjection, a: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = a.iter().map(|v| v.clamp(cp.support_lo, cp.support_hi)).collect();
    let ez = nonparam::nw_regress_with(&cp.ez_given_a, &clamped, cp.smoother);
    let tm = cp.treatment_model;
    a.iter()
        .zip(ez)
        .map(|(&ai, e)| ai - tm.gamma0 - tm.gamma1 * e)
        .collect()
}

/// Columns `(1, g₁(A), …, g_p(A), extra)` over the given treatment values.
pub(crate) fn h_columns(a: &[f64], basis: &BasisSpec, extra: &[f64]) -> Vec<Vec<f64>> {
    let n = a.len();
    let p = basis.dim();
    let mut cols = vec![vec![1.0; n]];
    cols.extend((0..p).map(|_| Vec::with_capacity(n)));
    let mut g = vec![0.0; p];
    for &ai in a {
        basis.eval_into(ai, &mut g);
        for (k, v) in g.iter().enumerate() {
            cols[k + 1].push(*v);
        }
    }
    cols.push(extra.to_vec());
    cols
}

fn design(cols: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    linalg::design_from_columns(&refs)
}

/// Regresses `Y` on `(1, g(A), Ĉ(A))` over the primary rows.
pub fn estimate_alpha(
    primary: &[PrimaryRow],
    cp: &ControlProjection,
    basis: &BasisSpec,
) -> Result<EstimateReport> {
    let a: Vec<f64> = primary.iter().map(|r| r.a).collect();
    let y: Vec<f64> = primary.iter().map(|r| r.y).collect();
    let c_hat = evaluate_control_projection(cp, &a);
    regress_on_projection(&a, &y, &c_hat, cp, basis)
}

pub(crate) fn regress_on_projection(
    a: &[f64],
    y: &[f64],
    c_hat: &[f64],
    cp: &ControlProjection,
    basis: &BasisSpec,
) -> Result<EstimateReport> {
    let p = basis.dim();
    let x = design(&h_columns(a, basis, c_hat));
    let b = linalg::least_squares(&x, y).map_err(|RankDeficient| Error::AssumptionOneViolated)?;
    Ok(EstimateReport {
        alpha_hat: b[1..=p].to_vec(),
        xi_hat: b[p + 1],
        intercept: b[0],
        variance: None,
        ci_lower: None,
        ci_upper: None,
        diagnostics: DiagnosticsBlock {
            gram_condition_number: linalg::gram_condition_number(&x),
            support_overlap_fraction: cp.overlap_fraction(a),
            n1: cp.n1(),
            n2: a.len(),
            bandwidth_used: cp.bandwidth(),
        },
    })
}

/// Condition number of the sample second-moment matrix of
/// `h(A) = (1, g(A)ᵀ, Ĉ(A))ᵀ` over the primary rows; `+∞` when singular.
pub fn assumption1_diagnostic(
    primary: &[PrimaryRow],
    cp: &ControlProjection,
    basis: &BasisSpec,
) -> f64 {
    let a: Vec<f64> = primary.iter().map(|r| r.a).collect();
    let c_hat = evaluate_control_projection(cp, &a);
    linalg::gram_condition_number(&design(&h_columns(&a, basis, &c_hat)))
}

/// Runs all three steps on a dataset that has already been validated.
pub fn estimate_unchecked(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &EstimatorConfig,
) -> Result<(EstimateReport, ControlProjection)> {
    let tm = fit_treatment_model(&ds.auxiliary)?;
    let cp = fit_control_projection(&ds.auxiliary, tm, cfg)?;
    let report = estimate_alpha(&ds.primary, &cp, basis)?;
    Ok((report, cp))
}

/// Validates the dataset, then runs all three estimation steps.
pub fn estimate(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &EstimatorConfig,
) -> Result<(EstimateReport, ControlProjection)> {
    validate_two_sample_dataset(ds, basis).into_result()?;
    estimate_unchecked(ds, basis, cfg)
}

/// Classical control-function estimate when `(Z, A, Y)` are jointly observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDataEstimate {
    pub alpha: Vec<f64>,
    /// Coefficient on the first-stage residual.
    pub rho: f64,
    pub intercept: f64,
}

/// OLS of `A` on `(1, Z)`, then OLS of `Y` on `(1, g(A), A − m̂(Z))`.
pub fn full_data_cf_estimate(joint: &[JointRow], basis: &BasisSpec) -> Result<FullDataEstimate> {
    let p = basis.dim();
    if joint.len() < p + 3 {
        return Err(Error::DegenerateDesign);
    }
    let aux: Vec<AuxiliaryRow> = joint.iter().map(|r| AuxiliaryRow { z: r.z, a: r.a }).collect();
    let tm = fit_treatment_model(&aux).map_err(|_| Error::DegenerateDesign)?;
    let a: Vec<f64> = joint.iter().map(|r| r.a).collect();
    let y: Vec<f64> = joint.iter().map(|r| r.y).collect();
    let resid: Vec<f64> = joint.iter().map(|r| r.a - tm.predict(r.z)).collect();
    let x = design(&h_columns(&a, basis, &resid));
    let b = linalg::least_squares(&x, &y).map_err(|RankDeficient| Error::DegenerateDesign)?;
    Ok(FullDataEstimate { alpha: b[1..=p].to_vec(), rho: b[p + 1], intercept: b[0] })
}
