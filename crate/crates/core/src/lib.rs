//! Two-sample instrumental-variable estimation of (possibly nonlinear)
//! treatment effects when the instrument and the outcome are never observed
//! on the same units.
//!
//! An auxiliary sample carries `(Z, A)`, a primary sample carries `(A, Y)`.
//! The control function projection `C(A) = E{A − m(Z) | A}` is learned from
//! the auxiliary sample and substituted for the unmeasured confounding in an
//! outcome regression fit on the primary sample.

pub mod basis;
pub mod data;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod linalg;
pub mod mar;
pub mod nonparam;
pub mod numdiff;
pub mod rng;
pub mod sim;
pub mod stats;

pub use basis::{eval_basis, BasisSpec, BasisTerm};
pub use data::{
    validate_two_sample_dataset, AuxiliaryRow, DiagnosticsBlock, EstimateReport, JointRow,
    PrimaryRow, TwoSampleDataset, ValidationResult, Violation,
};
pub use error::{Error, Result};
pub use estimator::{BandwidthRule, ControlProjection, EstimatorConfig, TreatmentModel};
pub use inference::{BootstrapConfig, InferenceMethod, InferenceReport};
pub use mar::MarConfig;
pub use nonparam::Smoother;
pub use sim::{DgpSpec, MonteCarloConfig, MonteCarloResult, Scenario, SettingId};
