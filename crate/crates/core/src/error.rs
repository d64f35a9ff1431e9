use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller asked for something the operation does not support.
    #[error("usage error: {0}")]
    Usage(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Record values were supplied out of order.
    #[error("ordering error: previous value {prev} must be below current value {curr}")]
    Ordering { prev: f64, curr: f64 },

    /// Input data is unusable (empty, non-finite, too few records, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(
        "quadrature did not converge: estimate {estimate}, error estimate {abs_error:e} \
         exceeds tolerance {tolerance:e} after {intervals} subintervals"
    )]
    Quadrature {
        estimate: f64,
        abs_error: f64,
        tolerance: f64,
        intervals: usize,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Domain(_)
            | Error::Ordering { .. }
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::Io(_) => 3,
            Error::Quadrature { .. } | Error::Numeric(_) => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        // validation failures inside deserialization already carry the prefix
        let msg = err.to_string();
        Error::Config(
            msg.strip_prefix("config error: ")
                .unwrap_or(&msg)
                .to_string(),
        )
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::Parse {
            line,
            message: err.to_string(),
        }
    }
}
