use thiserror::Error;

/// Errors raised by the numerical lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular or numerically singular: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("degenerate wireless-cable link {link}: diagonal of C * calib is zero")]
    DegenerateLink { link: usize },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
