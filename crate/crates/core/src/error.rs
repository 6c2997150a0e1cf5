use thiserror::Error;

/// Errors produced by the clustering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A non-empty cluster has zero scatter, so `ln(ss)` is undefined.
    #[error("degenerate cluster {cluster}: within-cluster sum of squares is zero")]
    DegenerateCluster { cluster: usize },

    #[error("no barrier-avoiding path between ({from_x}, {from_y}) and ({to_x}, {to_y})")]
    Unreachable { from_x: f64, from_y: f64, to_x: f64, to_y: f64 },

    #[error("matrix is not symmetric at ({i}, {j}): {a} vs {b}")]
    AsymmetricMatrix { i: usize, j: usize, a: f64, b: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by malformed or inconsistent input (as opposed
    /// to degenerate data or runtime failures).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::AsymmetricMatrix { .. }
                | Error::Parse(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
