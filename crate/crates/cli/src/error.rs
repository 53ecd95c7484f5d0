use std::path::PathBuf;

/// Failures of the experiment driver, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration file or target specification.
    #[error("configuration error: {0}")]
    Config(String),
    /// The run started but could not finish (e.g. non-finite loss).
    #[error("runtime failure: {0}")]
    Runtime(String),
    /// The loss or a gradient stopped being finite; the losses seen so far are kept.
    #[error("non-finite loss or gradient at step {step}")]
    Diverged { step: usize, trajectory: Vec<f64> },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 1 for configuration errors, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) | CliError::Diverged { .. } | CliError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<igr::Error> for CliError {
    fn from(e: igr::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
