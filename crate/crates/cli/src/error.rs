use hitchsim_core::HitchError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Malformed input file; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Input {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] HitchError),
    /// Guard failure detected by the driver rather than the library.
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    /// 0 success, 1 usage or input, 2 parameter, 3 numerical guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input { .. } | CliError::Io(_) => 1,
            CliError::Guard(_) => 3,
            CliError::Core(e) => match e.root() {
                HitchError::Parameter(_) | HitchError::GainNotAttainable(_) => 2,
                HitchError::InsufficientRows { .. } => 1,
                HitchError::Undefined(_)
                | HitchError::EdgeLeakage(_)
                | HitchError::IdlerAbsent
                | HitchError::NonMonotone { .. }
                | HitchError::OnsetNotFound(_)
                | HitchError::AtZ { .. } => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
