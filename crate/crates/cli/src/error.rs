use std::io;

/// Failures surfaced by the command-line front end, each tied to an exit
/// status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("{path}: missing required column '{column}'")]
    MissingColumn { path: String, column: String },

    #[error("{path}: line {line}, column '{column}': {message}")]
    Field { path: String, line: u64, column: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] cfproj_core::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: io::Error },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_ESTIMATION: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cfproj_core::Error as E;
        match self {
            CliError::Input { .. } | CliError::MissingColumn { .. } | CliError::Field { .. } => EXIT_PARSE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidDataset(_) | E::InvalidConfig(_) | E::InvalidBasis(_)) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_ESTIMATION,
            CliError::Output { .. } => EXIT_IO,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
