use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("array must have at least one antenna")]
    NoAntennas,

    #[error("antenna count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("distance {distance} m is below the reference distance {reference} m")]
    DistanceBelowReference { distance: f64, reference: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{branches} branches requested but the codebook holds only {cardinality} vectors")]
    TooManyBranches { branches: usize, cardinality: usize },

    #[error("combiner Gram matrix is singular or ill-conditioned")]
    SingularCombiner,

    #[error("an ADC needs at least one bit")]
    ZeroAdcBits,

    #[error("component file is missing key `{0}`")]
    MissingComponent(String),

    #[error("component file: {0}")]
    ComponentFile(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
