use thiserror::Error;

/// Errors raised by state validation, measurement models and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {0} exceeds the supported maximum of 64")]
    TooLarge(usize),

    #[error("malformed matrix: {0}")]
    Malformed(String),

    #[error("not Hermitian (max |M - M^dag| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("count table is empty")]
    EmptyTable,

    #[error("{0}")]
    InsufficientData(String),

    #[error("sigma must be positive (got {0}); the bootstrap table is probably degenerate")]
    NonPositiveSigma(f64),

    #[error("malformed JSON document")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Domain { name, value, range })
    }
}
