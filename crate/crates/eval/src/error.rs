use stca_array::ArrayError;
use stca_beam::BeamError;
use stca_eigen::EigenError;
use stca_nhss::NhssError;
use stca_nsjm::NsjmError;
use stca_scene::SceneError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("did not converge: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl EvalError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            EvalError::Config(_) | EvalError::Io(_) => 1,
            EvalError::Numeric(_) => 2,
            EvalError::NonConvergence(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, EvalError>;

impl From<ArrayError> for EvalError {
    fn from(e: ArrayError) -> Self {
        EvalError::Config(e.to_string())
    }
}

impl From<SceneError> for EvalError {
    fn from(e: SceneError) -> Self {
        EvalError::Config(e.to_string())
    }
}

impl From<EigenError> for EvalError {
    fn from(e: EigenError) -> Self {
        EvalError::Numeric(e.to_string())
    }
}

impl From<NhssError> for EvalError {
    fn from(e: NhssError) -> Self {
        match e {
            NhssError::Config(_) => EvalError::Config(e.to_string()),
            _ => EvalError::Numeric(e.to_string()),
        }
    }
}

impl From<NsjmError> for EvalError {
    fn from(e: NsjmError) -> Self {
        EvalError::Numeric(e.to_string())
    }
}

impl From<BeamError> for EvalError {
    fn from(e: BeamError) -> Self {
        match e {
            BeamError::Region(_) => EvalError::Config(e.to_string()),
            _ => EvalError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

impl From<csv::Error> for EvalError {
    fn from(e: csv::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}
