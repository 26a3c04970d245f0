use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Source term of a periodic inversion with nonzero mean.
    #[error("incompatible source: mean {mean:e} exceeds tolerance {tol:e}")]
    IncompatibleSource { mean: f64, tol: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("singular point: the Green function is unbounded at x = 0")]
    SingularPoint,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("synchronization error: vlasov t = {vlasov}, euler t = {euler}, tolerance {tol}")]
    Synchronization { vlasov: f64, euler: f64, tol: f64 },

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    /// A measured inequality or conservation check failed at its frozen constant.
    #[error("audit failure: {0}")]
    Audit(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 config, 3 numerical contract, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Config(_) | Error::Hypothesis(_) => 2,
            Error::IncompatibleSource { .. }
            | Error::SingularPoint
            | Error::Synchronization { .. }
            | Error::Audit(_)
            | Error::Data(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
