use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid truncation {0}: need N >= 1")]
    InvalidTruncation(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range for truncation {truncation}")]
    IndexOutOfRange { index: usize, truncation: usize },

    #[error("shape mismatch: expected dimension {expected}, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error(
        "truncation N = {truncation} insufficient at rho = {rho}: tail {tail:e} exceeds {limit:e}"
    )]
    TruncationInsufficient {
        rho: f64,
        truncation: usize,
        tail: f64,
        limit: f64,
    },

    #[error(
        "point with rho = {rho:e} lies inside the excluded origin disc (rho_min = {rho_min:e})"
    )]
    ExcludedOrigin { rho: f64, rho_min: f64 },

    #[error("finite-difference accuracy failure: {0}")]
    Accuracy(String),

    #[error("degenerate basis differentials: |det| = {det:e} below {threshold:e}")]
    DegenerateBasis { det: f64, threshold: f64 },

    #[error("outside the accuracy envelope: {0}")]
    Envelope(String),

    #[error("degenerate two-form: {0}")]
    DegenerateStructure(String),

    #[error("wave packet reached the outer 10% of the domain at t = {time}")]
    DomainEscape { time: f64 },

    #[error(
        "ill-conditioned polar decomposition: {masked} of {total} interior samples are masked"
    )]
    IllConditionedDecomposition { masked: usize, total: usize },

    #[error("quantity requested at masked node {0}")]
    MaskedRegion(usize),

    #[error("multi-precision arithmetic failed: {0}")]
    Numerical(String),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}
