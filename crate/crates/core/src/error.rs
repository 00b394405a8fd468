use thiserror::Error;

/// Errors raised by the computational kernels.
///
/// The variants fall into the classes the CLI maps onto exit codes:
/// input validation, resource caps and numerical precision.
#[derive(Debug, Error)]
pub enum Error {
    #[error("order of {lambda} modulo {p} is undefined: {p} divides {lambda}")]
    OrderUndefined { lambda: u64, p: u64 },

    #[error("{base} does not have multiplicative order {claimed} modulo {p}")]
    InvalidOrder { base: u64, p: u64, claimed: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} = {value} exceeds the cap {cap}")]
    ResourceCap {
        what: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("numerical precision failure in {what}: residual {residual:e}")]
    Precision { what: String, residual: f64 },

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("malformed order database: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
