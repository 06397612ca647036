use thiserror::Error;

#[derive(Debug, Error)]
pub enum SsgmError {
    /// A parameter lies outside the domain of the operation.
    #[error("parameter `{param}` out of domain: {reason}")]
    Domain { param: &'static str, reason: String },

    #[error("quadrature did not reach tolerance {tol:e} within {evaluations} evaluations (error estimate {estimate:e})")]
    Quadrature {
        tol: f64,
        evaluations: usize,
        estimate: f64,
    },

    /// Factorizations, fits and other numerical procedures that cannot finish.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("kernel evaluation failed at entry ({i}, {j}): {source}")]
    Entry {
        i: usize,
        j: usize,
        #[source]
        source: Box<SsgmError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SsgmError {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        SsgmError::Domain {
            param,
            reason: reason.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for invalid
    /// parameters or configuration, 3 for numerical failures, 1 for i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            SsgmError::Domain { .. } | SsgmError::Config(_) => 2,
            SsgmError::Entry { source, .. } => source.exit_code(),
            SsgmError::Quadrature { .. } | SsgmError::Numerical(_) => 3,
            SsgmError::Io { .. } => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SsgmError>;
