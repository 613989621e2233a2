//! Simulation designs, the Monte Carlo driver, and an exactly solvable
//! discrete population used as a test oracle.
//!
//! Both scenarios share the treatment equation `A = γZ + lU + ε`; the
//! outcome is `Y = αA + βU + η` (scenario 1) or `Y = αA² + βU + η`
//! (scenario 2). `U` and `ε` are standardized to mean 0, variance 1.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::data::{AuxiliaryRow, JointRow, PrimaryRow, TwoSampleDataset};
use crate::error::{Error, Result};
use crate::estimator::{estimate_unchecked, EstimatorConfig};
use crate::inference::{bootstrap_inference, BootstrapConfig};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// `Y = αA + βU + η`
    Linear,
    /// `Y = αA² + βU + η`
    Quadratic,
}

impl Scenario {
    pub fn basis(self) -> BasisSpec {
        match self {
            Scenario::Linear => BasisSpec::identity(),
            Scenario::Quadratic => BasisSpec::power(2).expect("power:2 is a valid basis"),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Scenario::Linear => 1,
            Scenario::Quadratic => 2,
        }
    }
}

impl TryFrom<u8> for Scenario {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Scenario::Linear),
            2 => Ok(Scenario::Quadratic),
            _ => Err(Error::InvalidConfig(format!("unknown scenario {v} (expected 1 or 2)"))),
        }
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.number()
    }
}

/// Law of the instrument. `Z` is sampled raw, not centered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum InstrumentDist {
    Bernoulli { p: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InstrumentDist {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            InstrumentDist::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            InstrumentDist::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            InstrumentDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    pub fn variance(self) -> f64 {
        match self {
            InstrumentDist::Bernoulli { p } => p * (1.0 - p),
            InstrumentDist::Exponential { rate } => 1.0 / (rate * rate),
            InstrumentDist::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }
}

/// Zero-mean, unit-variance noise families for `U` and `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    Normal,
    /// `Exp(1) − 1`
    Exponential,
    /// Uniform on `(−√3, √3)`
    Uniform,
}

impl NoiseDist {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::Normal => StandardNormal.sample(rng),
            NoiseDist::Exponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            NoiseDist::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

/// How units are split between the auxiliary (`R = 0`) and primary
/// (`R = 1`) samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Selection {
    /// The first `n1` units are auxiliary, the next `n2` primary.
    #[default]
    Mcar,
    /// `P(R = 1 | A) = 1 / (1 + exp(−(intercept + coef·A)))`; `n1 + n2`
    /// units are drawn and the stratum sizes are random.
    Logistic { coef: f64, intercept: f64 },
}

/// Generative configuration of one simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub scenario: Scenario,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub l: f64,
    pub z_dist: InstrumentDist,
    pub u_dist: NoiseDist,
    pub eps_dist: NoiseDist,
    /// Standard deviation of the normal outcome noise `η`.
    pub eta_sd: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(default)]
    pub selection: Selection,
}

impl DgpSpec {
    /// A catalogued design with `α = γ = β = 1` and `η ~ N(0, 1)`.
    pub fn from_setting(scenario: Scenario, setting: SettingId, n1: usize, n2: usize) -> Self {
        let (l, z_dist, u_dist) = setting.parameters();
        // ε follows U's family (normal pairs with normal, iid otherwise).
        Self {
            scenario,
            alpha: 1.0,
            gamma: 1.0,
            beta: 1.0,
            l,
            z_dist,
            u_dist,
            eps_dist: u_dist,
            eta_sd: 1.0,
            n1,
            n2,
            selection: Selection::Mcar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n1 == 0 || self.n2 == 0 {
            return bad("sample sizes must be positive");
        }
        for v in [self.alpha, self.gamma, self.beta, self.l, self.eta_sd] {
            if !v.is_finite() {
                return bad("DGP coefficients must be finite");
            }
        }
        if self.eta_sd < 0.0 {
            return bad("eta_sd must be nonnegative");
        }
        match self.z_dist {
            InstrumentDist::Bernoulli { p } if !(p > 0.0 && p < 1.0) => {
                return bad("Bernoulli p must lie in (0, 1)")
            }
            InstrumentDist::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                return bad("exponential rate must be positive")
            }
            InstrumentDist::Uniform { lo, hi } if !(lo < hi) => {
                return bad("uniform bounds must satisfy lo < hi")
            }
            _ => {}
        }
        if let Selection::Logistic { coef, intercept } = self.selection {
            if !(coef.is_finite() && intercept.is_finite()) {
                return bad("logistic selection coefficients must be finite");
            }
        }
        Ok(())
    }

    /// Analytic `var(A) = γ²var(Z) + l² + 1`.
    pub fn treatment_variance(&self) -> f64 {
        self.gamma * self.gamma * self.z_dist.variance() + self.l * self.l + 1.0
    }
}

/// Row of the settings tables: the main table (1–6, both scenarios) or the
/// appendix tables of the linear scenario (1–10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SettingId {
    Main(u8),
    Appendix(u8),
}

impl SettingId {
    fn parameters(self) -> (f64, InstrumentDist, NoiseDist) {
        use InstrumentDist as Z;
        use NoiseDist as U;
        let bern = Z::Bernoulli { p: 0.5 };
        let expo = Z::Exponential { rate: 1.0 };
        let unif = Z::Uniform { lo: -1.0, hi: 1.0 };
        match self {
            SettingId::Main(1) => (1.0, bern, U::Exponential),
            SettingId::Main(2) => (0.5, bern, U::Normal),
            SettingId::Main(3) => (1.0, expo, U::Uniform),
            SettingId::Main(4) => (0.5, expo, U::Normal),
            SettingId::Main(5) => (1.0, unif, U::Exponential),
            SettingId::Main(6) => (0.5, unif, U::Normal),
            SettingId::Appendix(1) => (1.0, bern, U::Exponential),
            SettingId::Appendix(2) => (1.0, bern, U::Uniform),
            SettingId::Appendix(3) => (1.0, bern, U::Normal),
            SettingId::Appendix(4) => (0.5, bern, U::Normal),
            SettingId::Appendix(5) => (1.0, expo, U::Uniform),
            SettingId::Appendix(6) => (1.0, expo, U::Normal),
            SettingId::Appendix(7) => (0.5, expo, U::Normal),
            SettingId::Appendix(8) => (1.0, unif, U::Exponential),
            SettingId::Appendix(9) => (1.0, unif, U::Normal),
            SettingId::Appendix(10) => (0.5, unif, U::Normal),
            _ => unreachable!("SettingId constructed out of range"),
        }
    }

    pub fn main(k: u8) -> Result<Self> {
        if (1..=6).contains(&k) {
            Ok(SettingId::Main(k))
        } else {
            Err(Error::InvalidConfig(format!("main setting {k} out of range 1..=6")))
        }
    }

    pub fn appendix(k: u8) -> Result<Self> {
        if (1..=10).contains(&k) {
            Ok(SettingId::Appendix(k))
        } else {
            Err(Error::InvalidConfig(format!("appendix setting {k} out of range 1..=10")))
        }
    }
}

impl fmt::Display for SettingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingId::Main(k) => write!(f, "main:{k}"),
            SettingId::Appendix(k) => write!(f, "appendix:{k}"),
        }
    }
}

impl FromStr for SettingId {
    type Err = Error;

    /// Accepts `"4"`, `"main:4"`, `"setting4"` or `"appendix:7"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidConfig(format!("invalid setting name '{s}'"));
        let (table, num) = match s.split_once(':') {
            Some((t, n)) => (t.trim(), n.trim()),
            None => ("main", s.strip_prefix("setting").unwrap_or(&s).trim()),
        };
        let k: u8 = num.parse().map_err(|_| bad())?;
        match table {
            "main" => SettingId::main(k),
            "appendix" => SettingId::appendix(k),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for SettingId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SettingId> for String {
    fn from(s: SettingId) -> String {
        s.to_string()
    }
}

/// One design of a results table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub scenario: Scenario,
    pub setting: SettingId,
    pub n1: usize,
    pub n2: usize,
}

impl CatalogEntry {
    pub fn spec(&self) -> DgpSpec {
        DgpSpec::from_setting(self.scenario, self.setting, self.n1, self.n2)
    }
}

const MAIN_SIZES: [(usize, usize); 4] = [(5000, 5000), (5000, 10000), (10000, 5000), (10000, 10000)];
const APPENDIX_SIZES: [(usize, usize); 9] = [
    (5000, 5000),
    (5000, 10000),
    (5000, 20000),
    (10000, 5000),
    (10000, 10000),
    (10000, 20000),
    (20000, 5000),
    (20000, 10000),
    (20000, 20000),
];
const LARGE_SIZES: [(usize, usize); 3] = [(10000, 20000), (20000, 10000), (20000, 20000)];

pub const CATALOG_NAMES: [&str; 5] =
    ["table1-scenario1", "table1-scenario2", "table3", "table4", "table5"];

/// Built-in catalogs reproducing the layout of the published tables: rows
/// ordered by sample sizes, then by setting.
pub fn builtin_catalog(name: &str) -> Result<Vec<CatalogEntry>> {
    let build = |scenario, settings: Vec<SettingId>, sizes: &[(usize, usize)]| {
        sizes
            .iter()
            .flat_map(|&(n1, n2)| {
                settings.iter().map(move |&setting| CatalogEntry { scenario, setting, n1, n2 })
            })
            .collect::<Vec<_>>()
    };
    let main: Vec<SettingId> = (1..=6).map(SettingId::Main).collect();
    Ok(match name {
        "table1-scenario1" => build(Scenario::Linear, main, &MAIN_SIZES),
        "table1-scenario2" => build(Scenario::Quadratic, main, &MAIN_SIZES),
        "table3" => build(Scenario::Linear, (1..=5).map(SettingId::Appendix).collect(), &APPENDIX_SIZES),
        "table4" => build(Scenario::Linear, (6..=10).map(SettingId::Appendix).collect(), &APPENDIX_SIZES),
        "table5" => build(Scenario::Quadratic, main, &LARGE_SIZES),
        _ => return Err(Error::InvalidConfig(format!("unknown catalog '{name}'"))),
    })
}

/// A simulated two-sample dataset plus the full draws behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dataset: TwoSampleDataset,
    /// Every unit's `(Z, A, Y)` in draw order, for the full-data baseline.
    pub joint: Vec<JointRow>,
    /// Stratum of each unit in `joint`: `true` for primary.
    pub in_primary: Vec<bool>,
}

/// Draws `n1 + n2` units from the design.
pub fn sample_dgp(spec: &DgpSpec, seed: u64) -> SimulatedData {
    let mut rng = rng::stream(seed, 0);
    let n = spec.n1 + spec.n2;
    let mut joint = Vec::with_capacity(n);
    let mut in_primary = Vec::with_capacity(n);
    let mut aux = Vec::new();
    let mut primary = Vec::new();
    for i in 0..n {
        let z = spec.z_dist.sample(&mut rng);
        let u = spec.u_dist.sample(&mut rng);
        let eps = spec.eps_dist.sample(&mut rng);
        let eta: f64 = StandardNormal.sample(&mut rng);
        let a = spec.gamma * z + spec.l * u + eps;
        let effect = match spec.scenario {
            Scenario::Linear => a,
            Scenario::Quadratic => a * a,
        };
        let y = spec.alpha * effect + spec.beta * u + spec.eta_sd * eta;
        let r = match spec.selection {
            Selection::Mcar => i >= spec.n1,
            Selection::Logistic { coef, intercept } => {
                let p = 1.0 / (1.0 + (-(intercept + coef * a)).exp());
                rng.random::<f64>() < p
            }
        };
        joint.push(JointRow { z, a, y });
        in_primary.push(r);
        if r {
            primary.push(PrimaryRow { a, y });
        } else {
            aux.push(AuxiliaryRow { z, a });
        }
    }
    SimulatedData { dataset: TwoSampleDataset::new(aux, primary), joint, in_primary }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub reps: usize,
    /// `None` skips interval estimation; coverage is then not reported.
    pub bootstrap: Option<BootstrapConfig>,
    pub master_seed: u64,
    #[serde(default)]
    pub estimator: EstimatorConfig,
}

/// Outcome of one successful repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub alpha_hat: f64,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub n_reps: usize,
    pub n_failed_reps: usize,
    /// `100 · (mean α̂ − α)`
    pub mean_bias_x100: f64,
    /// `100 · mean (α̂ − α)²`
    pub mse_x100: f64,
    /// Percentage of repetitions whose interval contains `α`.
    pub coverage_pct: Option<f64>,
    /// Mean bootstrap standard error.
    pub mean_se: Option<f64>,
    /// Monte Carlo standard deviation of `α̂`.
    pub sd_alpha: f64,
    pub wall_time_s: f64,
    pub outcomes: Vec<RepOutcome>,
}

/// Seed of repetition `rep`.
pub fn rep_seed(master_seed: u64, rep: usize) -> u64 {
    rng::derive_seed(master_seed, rep as u64)
}

/// Simulates, estimates and (optionally) bootstraps `cfg.reps` independent
/// datasets. Repetitions whose design degenerates are counted in
/// `n_failed_reps` and excluded from the moments.
pub fn run_monte_carlo(spec: &DgpSpec, cfg: &MonteCarloConfig) -> Result<MonteCarloResult> {
    spec.validate()?;
    if cfg.reps == 0 {
        return Err(Error::InvalidConfig("reps must be at least 1".into()));
    }
    let start = Instant::now();
    let basis = spec.scenario.basis();
    let per_rep: Vec<Result<Option<RepOutcome>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let sim = sample_dgp(spec, rep_seed(cfg.master_seed, rep));
            run_one(&sim.dataset, &basis, cfg, rep)
        })
        .collect();

    let mut outcomes = Vec::with_capacity(cfg.reps);
    for r in per_rep {
        if let Some(o) = r? {
            outcomes.push(o);
        }
    }
    if outcomes.is_empty() {
        return Err(Error::SimulationDegenerate { reps: cfg.reps });
    }
    let k = outcomes.len() as f64;
    let alphas: Vec<f64> = outcomes.iter().map(|o| o.alpha_hat).collect();
    let mean = alphas.iter().sum::<f64>() / k;
    let mse = alphas.iter().map(|a| (a - spec.alpha).powi(2)).sum::<f64>() / k;
    let coverage_pct = cfg.bootstrap.as_ref().map(|_| {
        let hits = outcomes
            .iter()
            .filter(|o| o.ci.is_some_and(|(lo, hi)| lo <= spec.alpha && spec.alpha <= hi))
            .count();
        100.0 * hits as f64 / k
    });
    let mean_se = cfg
        .bootstrap
        .as_ref()
        .map(|_| outcomes.iter().filter_map(|o| o.se).sum::<f64>() / k);
    Ok(MonteCarloResult {
        n_reps: cfg.reps,
        n_failed_reps: cfg.reps - outcomes.len(),
        mean_bias_x100: 100.0 * (mean - spec.alpha),
        mse_x100: 100.0 * mse,
        coverage_pct,
        mean_se,
        sd_alpha: crate::stats::sd(&alphas),
        wall_time_s: start.elapsed().as_secs_f64(),
        outcomes,
    })
}

fn run_one(
    ds: &TwoSampleDataset,
    basis: &BasisSpec,
    cfg: &MonteCarloConfig,
    rep: usize,
) -> Result<Option<RepOutcome>> {
    let est = match estimate_unchecked(ds, basis, &cfg.estimator) {
        Ok((report, _)) => report,
        Err(e) if e.is_degenerate() => return Ok(None),
        Err(e) => return Err(e),
    };
    let (se, ci) = match &cfg.bootstrap {
        None => (None, None),
        Some(b) => {
            let seed = rng::derive_seed(rng::derive_seed(b.seed, rep as u64), 1);
            let boot = BootstrapConfig { seed, ..b.clone() };
            match bootstrap_inference(ds, basis, &boot, &cfg.estimator) {
                Ok(inf) => (Some(inf.se[0]), Some((inf.ci_lower[0], inf.ci_upper[0]))),
                Err(e) if e.is_degenerate() || matches!(e, Error::BootstrapUnstable { .. }) => {
                    return Ok(None)
                }
                Err(e) => return Err(e),
            }
        }
    };
    Ok(Some(RepOutcome { rep, alpha_hat: est.alpha_hat[0], se, ci }))
}

/// Exact population quantities of the discrete design `Z ∈ {0,1}`,
/// `U ∈ {−1,1}` (independent, equiprobable), `ε ≡ 0`, `A = Z + U`,
/// `Y = A + U`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOracle {
    pub support: [f64; 4],
    pub probabilities: [f64; 4],
    /// `C(a) = E{A − m(Z) | A = a}` at each support point.
    pub c_values: [f64; 4],
    pub gamma0: f64,
    pub gamma1: f64,
    pub alpha: f64,
    pub xi: f64,
    /// `E[h hᵀ]` for `h = (1, A, C(A))`.
    pub gram: [[f64; 3]; 3],
}

/// Derives the discrete oracle by enumerating the four `(Z, U)` cells.
pub fn discrete_population_oracle() -> DiscreteOracle {
    let cells = [(0.0, -1.0), (0.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
    let a_of = |(z, u): (f64, f64)| z + u;
    // Linear projection of A on Z: γ₁ = cov(A, Z)/var(Z).
    let ez = 0.5;
    let ea = cells.iter().map(|&c| a_of(c)).sum::<f64>() / 4.0;
    let cov = cells.iter().map(|&(z, u)| (z - ez) * (a_of((z, u)) - ea)).sum::<f64>() / 4.0;
    let var = cells.iter().map(|&(z, _)| (z - ez).powi(2)).sum::<f64>() / 4.0;
    let gamma1 = cov / var;
    let gamma0 = ea - gamma1 * ez;

    let mut support = [-1.0, 0.0, 1.0, 2.0];
    support.sort_by(f64::total_cmp);
    let mut probabilities = [0.0; 4];
    let mut c_values = [0.0; 4];
    for (k, &s) in support.iter().enumerate() {
        let members: Vec<_> = cells.iter().filter(|&&c| a_of(c) == s).collect();
        probabilities[k] = members.len() as f64 / 4.0;
        c_values[k] = members
            .iter()
            .map(|&&(z, u)| a_of((z, u)) - gamma0 - gamma1 * z)
            .sum::<f64>()
            / members.len() as f64;
    }
    let mut gram = [[0.0; 3]; 3];
    for k in 0..4 {
        let h = [1.0, support[k], c_values[k]];
        for i in 0..3 {
            for j in 0..3 {
                gram[i][j] += probabilities[k] * h[i] * h[j];
            }
        }
    }
    DiscreteOracle {
        support,
        probabilities,
        c_values,
        gamma0,
        gamma1,
        alpha: 1.0,
        xi: 1.0,
        gram,
    }
}

/// The discrete design realized with exact cell frequencies: `copies` units
/// per `(Z, U)` cell in each sample.
pub fn discrete_exact_sample(copies: usize) -> SimulatedData {
    let cells = [(0.0, -1.0), (0.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
    let mut joint = Vec::with_capacity(8 * copies);
    let mut in_primary = Vec::with_capacity(8 * copies);
    let mut aux = Vec::with_capacity(4 * copies);
    let mut primary = Vec::with_capacity(4 * copies);
    for stratum in [false, true] {
        for _ in 0..copies {
            for &(z, u) in &cells {
                let a = z + u;
                let y = a + u;
                joint.push(JointRow { z, a, y });
                in_primary.push(stratum);
                if stratum {
                    primary.push(PrimaryRow { a, y });
                } else {
                    aux.push(AuxiliaryRow { z, a });
                }
            }
        }
    }
    SimulatedData { dataset: TwoSampleDataset::new(aux, primary), joint, in_primary }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_values() {
        let o = discrete_population_oracle();
        assert_eq!(o.support, [-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(o.probabilities, [0.25; 4]);
        assert_eq!(o.c_values, [-1.0, -1.0, 1.0, 1.0]);
        assert_eq!((o.gamma0, o.gamma1), (0.0, 1.0));
        // E[A] = 0.5, E[A·C] = (1 + 0 + 1 + 2)/4 = 1.
        assert_eq!(o.gram[0][1], 0.5);
        assert_eq!(o.gram[1][2], 1.0);
        assert_eq!(o.gram, [[1.0, 0.5, 0.0], [0.5, 1.5, 1.0], [0.0, 1.0, 1.0]]);
    }

    #[test]
    fn settings_parse() {
        assert_eq!("4".parse::<SettingId>().unwrap(), SettingId::Main(4));
        assert_eq!("setting2".parse::<SettingId>().unwrap(), SettingId::Main(2));
        assert_eq!("appendix:10".parse::<SettingId>().unwrap(), SettingId::Appendix(10));
        assert!("7".parse::<SettingId>().is_err());
        assert!("appendix:11".parse::<SettingId>().is_err());
        assert!("bogus".parse::<SettingId>().is_err());
    }

    #[test]
    fn catalogs_have_table_layout() {
        assert_eq!(builtin_catalog("table1-scenario1").unwrap().len(), 24);
        assert_eq!(builtin_catalog("table1-scenario2").unwrap().len(), 24);
        assert_eq!(builtin_catalog("table3").unwrap().len(), 45);
        assert_eq!(builtin_catalog("table4").unwrap().len(), 45);
        assert_eq!(builtin_catalog("table5").unwrap().len(), 18);
        assert!(builtin_catalog("table9").is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DgpSpec::from_setting(Scenario::Linear, SettingId::Main(1), 50, 60);
        let a = sample_dgp(&spec, 9);
        assert_eq!(a, sample_dgp(&spec, 9));
        assert_ne!(a.dataset, sample_dgp(&spec, 10).dataset);
        assert_eq!((a.dataset.n1(), a.dataset.n2()), (50, 60));
    }
}
