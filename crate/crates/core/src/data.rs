//! Observed-data types and dataset validation.
//!
//! The auxiliary sample holds `(Z, A)` pairs and the primary sample holds
//! `(A, Y)` pairs; the two never share rows. Stratum membership is implied by
//! which list a row lives in.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::linalg;

/// An instrument/treatment pair from the auxiliary sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryRow {
    pub z: f64,
    pub a: f64,
}

/// A treatment/outcome pair from the primary sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimaryRow {
    pub a: f64,
    pub y: f64,
}

/// A fully observed `(Z, A, Y)` triple, available only in simulations or
/// when validating against the classical control-function estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointRow {
    pub z: f64,
    pub a: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoSampleDataset {
    pub auxiliary: Vec<AuxiliaryRow>,
    pub primary: Vec<PrimaryRow>,
}

impl TwoSampleDataset {
    pub fn new(auxiliary: Vec<AuxiliaryRow>, primary: Vec<PrimaryRow>) -> Self {
        Self { auxiliary, primary }
    }

    pub fn n1(&self) -> usize {
        self.auxiliary.len()
    }

    pub fn n2(&self) -> usize {
        self.primary.len()
    }

    /// Treatment values from both samples, auxiliary first.
    pub fn pooled_treatment(&self) -> Vec<f64> {
        self.auxiliary
            .iter()
            .map(|r| r.a)
            .chain(self.primary.iter().map(|r| r.a))
            .collect()
    }
}

/// One failed dataset invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFiniteAuxiliary { row: usize },
    NonFinitePrimary { row: usize },
    AuxiliaryTooSmall { n1: usize },
    PrimaryTooSmall { n2: usize, required: usize },
    InstrumentZeroVariance,
    AuxiliaryTreatmentZeroVariance,
    DesignRankDeficient,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteAuxiliary { row } => {
                write!(f, "auxiliary row {row} has a non-finite value")
            }
            Violation::NonFinitePrimary { row } => {
                write!(f, "primary row {row} has a non-finite value")
            }
            Violation::AuxiliaryTooSmall { n1 } => {
                write!(f, "auxiliary sample too small: n1 = {n1}, need at least 2")
            }
            Violation::PrimaryTooSmall { n2, required } => {
                write!(f, "primary sample too small: n2 = {n2}, need at least {required}")
            }
            Violation::InstrumentZeroVariance => write!(f, "instrument has zero variance"),
            Violation::AuxiliaryTreatmentZeroVariance => {
                write!(f, "auxiliary treatment has zero variance")
            }
            Violation::DesignRankDeficient => write!(f, "design matrix rank-deficient"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::InvalidDataset(self.violations))
        }
    }
}

pub(crate) fn has_spread(v: impl Iterator<Item = f64> + Clone) -> bool {
    let mut it = v.clone();
    match it.next() {
        None => false,
        Some(first) => it.any(|x| x != first),
    }
}

/// Checks every dataset invariant and reports all failures at once.
pub fn validate_two_sample_dataset(ds: &TwoSampleDataset, basis: &BasisSpec) -> ValidationResult {
    let mut violations = Vec::new();
    let p = basis.dim();

    for (i, r) in ds.auxiliary.iter().enumerate() {
        if !(r.z.is_finite() && r.a.is_finite()) {
            violations.push(Violation::NonFiniteAuxiliary { row: i });
        }
    }
    for (i, r) in ds.primary.iter().enumerate() {
        if !(r.a.is_finite() && r.y.is_finite()) {
            violations.push(Violation::NonFinitePrimary { row: i });
        }
    }
    if ds.n1() < 2 {
        violations.push(Violation::AuxiliaryTooSmall { n1: ds.n1() });
    }
    if ds.n2() < p + 2 {
        violations.push(Violation::PrimaryTooSmall { n2: ds.n2(), required: p + 2 });
    }
    if ds.n1() >= 2 {
        if !has_spread(ds.auxiliary.iter().map(|r| r.z)) {
            violations.push(Violation::InstrumentZeroVariance);
        }
        if !has_spread(ds.auxiliary.iter().map(|r| r.a)) {
            violations.push(Violation::AuxiliaryTreatmentZeroVariance);
        }
    }

    let primary_finite = ds.primary.iter().all(|r| r.a.is_finite());
    if ds.n2() > p && primary_finite {
        let n2 = ds.n2();
        let ones = vec![1.0; n2];
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n2); p];
        let mut g = vec![0.0; p];
        for r in &ds.primary {
            basis.eval_into(r.a, &mut g);
            for (c, v) in cols.iter_mut().zip(&g) {
                c.push(*v);
            }
        }
        let mut refs: Vec<&[f64]> = vec![&ones];
        refs.extend(cols.iter().map(Vec::as_slice));
        if !linalg::has_full_column_rank(&linalg::design_from_columns(&refs)) {
            violations.push(Violation::DesignRankDeficient);
        }
    } else if primary_finite && ds.n2() > 0 {
        violations.push(Violation::DesignRankDeficient);
    }

    ValidationResult { violations }
}

/// Numerical health indicators attached to every estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsBlock {
    /// Condition number of the sample second-moment matrix of
    /// `h(A) = (1, g(A)ᵀ, Ĉ(A))ᵀ` over the primary rows; `+∞` when singular,
    /// serialized as the string `"inf"`.
    #[serde(with = "inf_as_string")]
    pub gram_condition_number: f64,
    /// Fraction of primary treatment values inside the auxiliary range.
    pub support_overlap_fraction: f64,
    pub n1: usize,
    pub n2: usize,
    pub bandwidth_used: f64,
}

/// Point estimates, optionally decorated with inference results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub alpha_hat: Vec<f64>,
    /// Coefficient on the control function projection.
    pub xi_hat: f64,
    pub intercept: f64,
    pub variance: Option<Vec<Vec<f64>>>,
    pub ci_lower: Option<Vec<f64>>,
    pub ci_upper: Option<Vec<f64>>,
    pub diagnostics: DiagnosticsBlock,
}

mod inf_as_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(de::Error::custom(format!("expected a number or \"inf\", got \"{s}\""))),
        }
    }
}
