use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed or out-of-range input data; `location` names the position.
    #[error("{location}: {message}")]
    Data { location: String, message: String },

    /// The operation needs state that is missing (empty table, too few words).
    #[error("{0}")]
    State(String),

    /// A statistic is mathematically undefined for this input.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is rank deficient: smallest singular value {sigma_min:e}")]
    Singular { sigma_min: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 I/O, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Singular { .. } | Error::Numeric(_) | Error::Divergence { .. } => 4,
            _ => 2,
        }
    }
}
