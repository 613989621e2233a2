//! Run configuration: a flat JSON document whose keys mirror the
//! command-line flags. Flags take precedence over file keys.

use std::fs;
use std::path::{Path, PathBuf};

use cfproj_core::{BandwidthRule, BasisSpec, EstimatorConfig, MarConfig, Smoother};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Estimate,
    Simulate,
    Diagnose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    Bootstrap,
    Asymptotic,
    Both,
    None,
}

impl InferenceMode {
    pub fn bootstrap(self) -> bool {
        matches!(self, InferenceMode::Bootstrap | InferenceMode::Both)
    }

    pub fn asymptotic(self) -> bool {
        matches!(self, InferenceMode::Asymptotic | InferenceMode::Both)
    }
}

/// `"auto"`, `"silverman"`, `"loocv"` or a fixed positive bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSetting {
    Value(f64),
    Name(String),
}

impl BandwidthSetting {
    pub fn from_flag(s: &str) -> Self {
        match s.trim().parse::<f64>() {
            Ok(v) => BandwidthSetting::Value(v),
            Err(_) => BandwidthSetting::Name(s.trim().to_ascii_lowercase()),
        }
    }

    fn rule(&self, loocv_grid: Option<&[f64]>) -> Result<BandwidthRule> {
        match self {
            BandwidthSetting::Value(h) if *h > 0.0 && h.is_finite() => Ok(BandwidthRule::Fixed(*h)),
            BandwidthSetting::Value(h) => Err(CliError::Config(format!("bandwidth must be positive, got {h}"))),
            BandwidthSetting::Name(n) => match n.as_str() {
                "auto" => Ok(BandwidthRule::Auto),
                "silverman" => Ok(BandwidthRule::Silverman),
                "loocv" => Ok(BandwidthRule::Loocv(loocv_grid.unwrap_or_default().to_vec())),
                other => Err(CliError::Config(format!(
                    "bandwidth: expected auto, silverman, loocv or a number, got '{other}'"
                ))),
            },
        }
    }
}

/// Every configurable key. Absent keys fall back to per-mode defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primary: Option<PathBuf>,
    /// Joint `z,a,y` file for the full-data baseline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loocv_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoother: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub inference: Option<InferenceMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_a_grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_z_is_binary: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_density_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_treatment_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_instrument_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_projection_bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mar_outcome_bandwidth: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub setting: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_sd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_coef: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `over` replace those in `self`.
    pub fn merged(self, over: FileConfig) -> Result<Self> {
        let to_map = |c: &FileConfig| match serde_json::to_value(c) {
            Ok(Value::Object(m)) => Ok(m),
            _ => Err(CliError::Config("configuration is not a key-value document".into())),
        };
        let mut base = to_map(&self)?;
        base.extend(to_map(&over)?);
        serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Fills unset keys with the defaults of `mode`.
    pub fn with_defaults(mut self, mode: Mode) -> Self {
        self.mode = Some(mode);
        self.format.get_or_insert(Format::Json);
        if mode != Mode::Simulate {
            self.basis.get_or_insert_with(|| "identity".into());
        }
        self.bandwidth.get_or_insert_with(|| BandwidthSetting::Name("auto".into()));
        self.smoother.get_or_insert_with(|| "auto".into());
        match mode {
            Mode::Estimate => {
                let mar = *self.mar.get_or_insert(false);
                self.inference.get_or_insert(InferenceMode::Bootstrap);
                self.bootstrap.get_or_insert(500);
                self.level.get_or_insert(0.95);
                self.seed.get_or_insert(0);
                if mar {
                    self.mar_a_grid_size.get_or_insert(MarConfig::default().a_grid_size);
                }
            }
            Mode::Simulate => {
                self.reps.get_or_insert(500);
                self.bootstrap.get_or_insert(500);
                self.level.get_or_insert(0.95);
                self.seed.get_or_insert(0);
                self.timing.get_or_insert(false);
                if self.catalog.is_none() {
                    self.scenario.get_or_insert(1);
                    self.n1.get_or_insert(5000);
                    self.n2.get_or_insert(5000);
                }
            }
            Mode::Diagnose => {}
        }
        self
    }

    /// The configuration as embedded in reports: output destinations and
    /// the worker count are left out since they do not affect results.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut v {
            for k in ["out", "grid_out", "threads"] {
                m.remove(k);
            }
        }
        v
    }

    pub fn basis_spec(&self) -> Result<BasisSpec> {
        let s = self.basis.as_deref().unwrap_or("identity");
        BasisSpec::parse_list(s).map_err(|e| CliError::Config(format!("basis: {e}")))
    }

    pub fn smoother_kind(&self) -> Result<Smoother> {
        match self.smoother.as_deref().unwrap_or("auto") {
            "auto" => Ok(Smoother::Auto),
            "exact" => Ok(Smoother::Exact),
            "binned" => Ok(Smoother::Binned),
            other => Err(CliError::Config(format!("smoother: expected auto, exact or binned, got '{other}'"))),
        }
    }

    pub fn estimator(&self) -> Result<EstimatorConfig> {
        let bw = self.bandwidth.clone().unwrap_or(BandwidthSetting::Name("auto".into()));
        Ok(EstimatorConfig {
            bandwidth: bw.rule(self.loocv_grid.as_deref())?,
            smoother: self.smoother_kind()?,
        })
    }

    pub fn mar_config(&self, z_is_binary: bool) -> Result<MarConfig> {
        Ok(MarConfig {
            a_grid_size: self.mar_a_grid_size.unwrap_or(MarConfig::default().a_grid_size),
            z_is_binary: self.mar_z_is_binary.unwrap_or(z_is_binary),
            density_bandwidth: self.mar_density_bandwidth,
            treatment_bandwidth: self.mar_treatment_bandwidth,
            instrument_bandwidth: self.mar_instrument_bandwidth,
            projection_bandwidth: self.mar_projection_bandwidth,
            outcome_bandwidth: self.mar_outcome_bandwidth,
            smoother: self.smoother_kind()?,
        })
    }

    pub fn require_path<'a>(&'a self, p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
        p.as_deref()
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}' (or flag --{key})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = serde_json::from_str::<FileConfig>("{\n  \"reps\": 3,\n  \"bogus\": 1\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn flags_override_file() {
        let file = FileConfig { reps: Some(10), seed: Some(1), ..Default::default() };
        let flags = FileConfig { seed: Some(7), ..Default::default() };
        let m = file.merged(flags).unwrap();
        assert_eq!((m.reps, m.seed), (Some(10), Some(7)));
    }

    #[test]
    fn bandwidth_settings() {
        assert_eq!(BandwidthSetting::from_flag("0.4").rule(None).unwrap(), BandwidthRule::Fixed(0.4));
        assert_eq!(BandwidthSetting::from_flag("Auto").rule(None).unwrap(), BandwidthRule::Auto);
        assert!(BandwidthSetting::from_flag("-1").rule(None).is_err());
        assert!(BandwidthSetting::from_flag("wide").rule(None).is_err());
        let cfg: FileConfig = serde_json::from_str(r#"{"bandwidth": 0.25}"#).unwrap();
        assert_eq!(cfg.bandwidth, Some(BandwidthSetting::Value(0.25)));
    }

    #[test]
    fn echo_omits_destinations() {
        let c = FileConfig { out: Some("x.json".into()), threads: Some(4), reps: Some(2), ..Default::default() };
        assert_eq!(c.echo(), serde_json::json!({"reps": 2}));
    }
}
