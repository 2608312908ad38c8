use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in matrix at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular system (damping {lambda:e})")]
    Singular { lambda: f64 },

    #[error("points are not distinct: indices {first} and {second} are within {tol:e}")]
    NotDistinct { first: usize, second: usize, tol: f64 },

    #[error("root finding did not converge after {iterations} iterations (max update {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<num_complex::Complex64>,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("construction infeasible: {0}")]
    ConstructionInfeasible(String),

    #[error("construction failed after {retries} retries (last: {last})")]
    RetriesExhausted { retries: usize, last: String },

    #[error("invalid responses: {0}")]
    InvalidResponses(String),

    #[error("too few responses for individual decoding: have {have}, need {need}")]
    TooFewResponses { have: usize, need: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NonFinite { .. }
                | Error::NotDistinct { .. }
                | Error::InvalidParams(_)
                | Error::InvalidPattern(_)
                | Error::InvalidCode(_)
                | Error::InvalidResponses(_)
                | Error::TooFewResponses { .. }
                | Error::InvalidConfig(_)
                | Error::Json(_)
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::Singular { .. } => "singular",
            Error::NotDistinct { .. } => "not_distinct",
            Error::NoConvergence { .. } => "no_convergence",
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidPattern(_) => "invalid_pattern",
            Error::InvalidCode(_) => "invalid_code",
            Error::ConstructionInfeasible(_) => "construction_infeasible",
            Error::RetriesExhausted { .. } => "retries_exhausted",
            Error::InvalidResponses(_) => "invalid_responses",
            Error::TooFewResponses { .. } => "too_few_responses",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
