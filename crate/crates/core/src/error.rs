use alloc::string::String;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("column {0} has (numerically) zero norm")]
    ZeroColumn(usize),
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("empty matrix")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid rank {rank}: must lie in 1..={max}")]
    InvalidRank { rank: usize, max: usize },
    #[error("matrix is not positive semidefinite (eigenvalue {min} vs largest {max})")]
    NotPsd { min: f64, max: f64 },
    #[error("need at least two columns to measure coherence")]
    TooFewColumns,
    #[error("no off-diagonal magnitude exceeds the threshold {0}")]
    EmptyAverage(f64),
    #[error("diagonal entry {0} is not positive")]
    DegenerateDiagonal(usize),
    #[error("all eigenvalues of D D^T vanish")]
    DegenerateSpectrum,
    #[error("effective dictionary lost column {column} at iteration {iteration}")]
    DegenerateIterate { iteration: usize, column: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("linear system is infeasible within tolerance")]
    Infeasible,
    #[error("iteration cap of {0} reached")]
    MaxIter(usize),
    #[error("support enumeration of {0} candidates exceeds the guard")]
    TooLarge(u128),
    #[error("no support of size <= {0} explains the measurements")]
    NotFound(usize),
    #[error("normal equations are numerically singular")]
    SingularSystem,
}

pub type Result<T> = core::result::Result<T, Error>;
