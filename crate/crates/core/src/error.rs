use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("element index {index} out of range for an array of {count} elements")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("degenerate geometry: rx element {m} and tx element {n} are {distance:e} m apart")]
    DegenerateGeometry { m: usize, n: usize, distance: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("search space of {size} hypotheses exceeds the cap of {cap}")]
    SearchSpaceTooLarge { size: u128, cap: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
