use thiserror::Error;

/// Which orthogonal factor of an [`SvdParam`](crate::SvdParam) an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    U,
    V,
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Factor::U => f.write_str("U"),
            Factor::V => f.write_str("V"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected} but found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("degenerate Householder vector (squared norm {norm_sq:e} at or below threshold)")]
    DegenerateVector { norm_sq: f64 },
    #[error("gradient step made vector {index} of factor {factor} degenerate")]
    DegenerateUpdate { factor: Factor, index: usize },
    #[error("cannot compact an empty list of Householder vectors")]
    EmptyBlock,
    #[error("block width must be at least 1")]
    ZeroBlockWidth,
    #[error("operation requires a square parameter, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("operation requires the symmetric form U diag(sigma) U^T (empty V chain)")]
    NotSymmetricForm,
    #[error("singular matrix: sigma[{index}] is zero")]
    Singular { index: usize },
    #[error("Cayley map undefined: sigma[{index}] = -1")]
    CayleyPole { index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
