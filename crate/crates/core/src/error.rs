use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("customer {customer} is assigned to facility {facility}, which is closed")]
    ClosedFacility { customer: usize, facility: usize },

    #[error("malformed assignment: {0}")]
    MalformedAssignment(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("LP engine failure: {0}")]
    Lp(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("invalid generator input: {0}")]
    Generator(String),

    #[error("unsupported format tag {0:?}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
