use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("curve is not invertible: slope is zero")]
    NotInvertible,

    #[error("fit did not converge")]
    NotConverged,

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A fitted curve violates the monotonicity the caller relies on.
    #[error("policy: {0}")]
    Policy(String),

    /// Configuration problem, naming the offending key.
    #[error("{key}: {constraint}")]
    Config { key: String, constraint: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
