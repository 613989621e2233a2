use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{FileConfig, Format, InferenceMode, Mode};

#[derive(Debug, Parser)]
#[command(name = "cfproj", version, about = "Two-sample control-function-projection estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the treatment effect from auxiliary and primary CSV files.
    Estimate(EstimateArgs),
    /// Run Monte Carlo experiments over simulated designs.
    Simulate(SimulateArgs),
    /// Check identifiability and support overlap without fitting the outcome model.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn mode(&self) -> Mode {
        match self {
            Command::Estimate(_) => Mode::Estimate,
            Command::Simulate(_) => Mode::Simulate,
            Command::Diagnose(_) => Mode::Diagnose,
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Estimate(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Diagnose(a) => &a.common,
        }
    }

    /// Flags given on the command line, as a partial configuration.
    pub fn overrides(&self) -> FileConfig {
        let c = self.common();
        let mut f = FileConfig {
            out: c.out.clone(),
            format: c.format,
            seed: c.seed,
            threads: c.threads,
            basis: c.basis.clone(),
            bandwidth: c.bandwidth.as_deref().map(crate::config::BandwidthSetting::from_flag),
            smoother: c.smoother.clone(),
            ..FileConfig::default()
        };
        match self {
            Command::Estimate(a) => {
                f.aux = a.data.aux.clone();
                f.primary = a.data.primary.clone();
                f.bootstrap = a.bootstrap;
                f.level = a.level;
                f.inference = a.inference;
                f.joint = a.full_data_baseline.clone();
                if a.mar {
                    f.mar = Some(true);
                }
            }
            Command::Simulate(a) => {
                f.reps = a.reps;
                f.bootstrap = a.bootstrap;
                f.level = a.level;
                f.catalog = a.catalog.clone();
                f.setting = a.setting.clone();
                f.scenario = a.scenario;
                f.n1 = a.n1;
                f.n2 = a.n2;
                f.selection_coef = a.selection_coef;
                if a.timing {
                    f.timing = Some(true);
                }
            }
            Command::Diagnose(a) => {
                f.aux = a.data.aux.clone();
                f.primary = a.data.primary.clone();
                f.grid_out = a.grid_out.clone();
            }
        }
        f
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration file; command-line flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (written atomically); standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Bootstrap seed (estimate) or master seed (simulate).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for bootstrap and Monte Carlo loops.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated basis terms, e.g. "identity" or "identity,power:2".
    #[arg(long)]
    pub basis: Option<String>,
    /// "auto", "silverman", "loocv" or a positive number.
    #[arg(long)]
    pub bandwidth: Option<String>,
    /// "auto", "exact" or "binned".
    #[arg(long)]
    pub smoother: Option<String>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Auxiliary sample CSV with columns z,a.
    #[arg(long)]
    pub aux: Option<PathBuf>,
    /// Primary sample CSV with columns a,y.
    #[arg(long)]
    pub primary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Bootstrap replicates.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Confidence level.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_enum)]
    pub inference: Option<InferenceMode>,
    /// Use the estimator for treatment-dependent selection.
    #[arg(long)]
    pub mar: bool,
    /// Joint z,a,y CSV for the classical control-function estimate.
    #[arg(long, value_name = "JOINT_CSV")]
    pub full_data_baseline: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Monte Carlo repetitions per design.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Bootstrap replicates per repetition; 0 skips coverage.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Built-in catalog name or path to a JSON catalog file.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Single setting, e.g. "4" or "appendix:7".
    #[arg(long)]
    pub setting: Option<String>,
    /// 1 (linear) or 2 (quadratic).
    #[arg(long)]
    pub scenario: Option<u8>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Logistic selection slope in the treatment.
    #[arg(long)]
    pub selection_coef: Option<f64>,
    /// Include wall-clock times (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the fitted projection grid as CSV.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}
