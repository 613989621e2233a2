use crate::data::Violation;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate instrument: instrument has zero variance in the auxiliary sample")]
    DegenerateInstrument,

    #[error("zero-spread sample")]
    ZeroSpread,

    #[error("cv-degenerate: every candidate bandwidth leaves some point without neighbours")]
    CvDegenerate,

    #[error("identification condition violated in sample: basis terms and control projection are linearly dependent")]
    AssumptionOneViolated,

    #[error("degenerate design: regressors are linearly dependent")]
    DegenerateDesign,

    #[error("bootstrap unstable: {failed} of {total} replicates hit a degenerate design")]
    BootstrapUnstable { failed: usize, total: usize },

    #[error("variance estimation failed: {0}")]
    VarianceEstimationFailed(String),

    #[error("instrument value {z} outside estimable range")]
    InstrumentOutOfRange { z: f64 },

    #[error("simulation degenerate: all {reps} repetitions failed")]
    SimulationDegenerate { reps: usize },

    #[error("invalid dataset: {}", join_violations(.0))]
    InvalidDataset(Vec<Violation>),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures caused by a degenerate (resampled or simulated)
    /// design rather than by a caller mistake. Bootstrap and Monte Carlo
    /// drivers drop and count these.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInstrument
                | Error::ZeroSpread
                | Error::CvDegenerate
                | Error::AssumptionOneViolated
                | Error::DegenerateDesign
                | Error::InstrumentOutOfRange { .. }
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
