use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The model does not provide the capability the operation needs
    /// (a gradient, a proximal operator, a finite moment).
    #[error("unsupported model operation: {0}")]
    Unsupported(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("point outside the model domain: {0}")]
    DomainViolation(String),

    /// The implicit-step solver stopped before reaching the requested
    /// gradient tolerance. `best` is the iterate with the smallest gradient norm.
    #[error("inner solve did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    InnerSolveFailure {
        best: Vec<f64>,
        grad_norm: f64,
        iterations: usize,
    },

    #[error("step {iteration} failed: {source}")]
    Step {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("moment is undefined for this distribution: {0}")]
    UndefinedMoment(&'static str),

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("bound is invalid: contraction constant {0} is not below one")]
    InvalidBound(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures caused by the numerics of a run rather than by its
    /// configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite(_)
            | Error::DomainViolation(_)
            | Error::InnerSolveFailure { .. }
            | Error::DegenerateVariance
            | Error::InvalidBound(_) => true,
            Error::Step { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
