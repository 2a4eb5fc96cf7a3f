use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] phcqed::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The fit did not converge; `report` holds the best candidate as JSON.
    #[error("{message}")]
    FitFailed { message: String, report: String },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 4 for fits
    /// that did not converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Model(phcqed::Error::InvalidParameter(_)) => 2,
            CliError::Model(phcqed::Error::FitFailed { .. }) | CliError::FitFailed { .. } => 4,
            CliError::Model(_) => 3,
        }
    }
}
