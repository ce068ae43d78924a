use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadratic form is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("derivative order {order} out of range for {kind} (max {max})")]
    DerivativeOrder {
        order: usize,
        kind: &'static str,
        max: usize,
    },

    #[error("state mismatch: {0}")]
    Mismatch(String),

    #[error("state violates boundary data: {0}")]
    BoundaryViolation(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("incremental step {step} did not converge: {reason}")]
    SolverFailure { step: usize, reason: String },

    #[error(
        "material is classified `none`; the plate-to-ribbon evolution requires hypothesis (H1) or (H2)"
    )]
    HypothesisRequired,

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
