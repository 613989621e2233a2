//! Known treatment-effect shapes `g(a)`.
//!
//! A [`BasisSpec`] is an ordered list of polynomial terms. The estimator
//! regresses the outcome on `(1, g(A), C(A))`, so terms must be distinct
//! and non-constant (`Power(0)` would collide with the intercept).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTerm {
    /// `a ↦ a`
    Identity,
    /// `a ↦ a^k`, `k ≥ 1`
    Power(u32),
}

impl BasisTerm {
    #[inline]
    pub fn eval(self, a: f64) -> f64 {
        match self {
            BasisTerm::Identity => a,
            BasisTerm::Power(k) => a.powi(k as i32),
        }
    }

    fn degree(self) -> u32 {
        match self {
            BasisTerm::Identity => 1,
            BasisTerm::Power(k) => k,
        }
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTerm::Identity => write!(f, "identity"),
            BasisTerm::Power(k) => write!(f, "power:{k}"),
        }
    }
}

impl FromStr for BasisTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "identity" || s == "linear" {
            return Ok(BasisTerm::Identity);
        }
        if let Some(k) = s.strip_prefix("power:") {
            let k: u32 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidBasis(format!("bad power exponent in '{s}'")))?;
            if k == 0 {
                return Err(Error::InvalidBasis("power:0 collides with the intercept".into()));
            }
            return Ok(BasisTerm::Power(k));
        }
        Err(Error::InvalidBasis(format!(
            "unknown basis term '{s}' (expected 'identity' or 'power:<k>')"
        )))
    }
}

/// The vector of known functions `g(·)`; its length is the dimension `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BasisTerm>", into = "Vec<BasisTerm>")]
pub struct BasisSpec {
    terms: Vec<BasisTerm>,
}

impl BasisSpec {
    pub fn new(terms: Vec<BasisTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidBasis("basis must contain at least one term".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.degree() == 0 {
                return Err(Error::InvalidBasis("power:0 collides with the intercept".into()));
            }
            // Identity and Power(1) are the same function.
            if terms[..i].iter().any(|u| u.degree() == t.degree()) {
                return Err(Error::InvalidBasis(format!("duplicate basis term '{t}'")));
            }
        }
        Ok(Self { terms })
    }

    pub fn identity() -> Self {
        Self { terms: vec![BasisTerm::Identity] }
    }

    pub fn power(k: u32) -> Result<Self> {
        Self::new(vec![BasisTerm::Power(k)])
    }

    /// Parses a comma-separated list such as `"identity,power:2"`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let terms = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Writes `g(a)` into `out` (length `p`).
    #[inline]
    pub fn eval_into(&self, a: f64, out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.eval(a);
        }
    }
}

impl TryFrom<Vec<BasisTerm>> for BasisSpec {
    type Error = Error;
    fn try_from(v: Vec<BasisTerm>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BasisSpec> for Vec<BasisTerm> {
    fn from(b: BasisSpec) -> Self {
        b.terms
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Evaluates `g(a)`.
pub fn eval_basis(basis: &BasisSpec, a: f64) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    basis.eval_into(a, &mut out);
    out
}
