use orthomin_core::diagnostics::DiagnosticsError;
use orthomin_core::moments::MomentsError;
use orthomin_core::qseries::QSeriesError;
use orthomin_core::{LinopError, OrthominError, SpectraError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical contract violated: {0}")]
    Contract(String),
    #[error("identity check failed: {0}")]
    Identity(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] OrthominError),
    #[error(transparent)]
    Moments(#[from] MomentsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    QSeries(#[from] QSeriesError),
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<LinopError> for CliError {
    fn from(e: LinopError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    /// 0 success, 2 configuration, 3 numerical contract, 4 identity failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Json(_) => 2,
            CliError::Contract(_) | CliError::Diagnostics(_) => 3,
            CliError::Identity(_) => 4,
            CliError::Moments(MomentsError::IdentityViolation { .. }) => 4,
            CliError::Moments(MomentsError::Contract(_)) => 2,
            CliError::QSeries(_) => 4,
            CliError::Io(_) | CliError::Solver(_) | CliError::Moments(_) => 1,
        }
    }
}
