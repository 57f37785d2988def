use crate::linalg::IterationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("entry ({row}, {col}) lies outside a {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular (pivot {pivot:e} in column {col})")]
    SingularMatrix { col: usize, pivot: f64 },
    #[error("zero pivot in ILU(0) at row {row}")]
    ZeroPivot { row: usize },
    #[error("{solver} broke down after {} iterations", .report.iterations)]
    Breakdown {
        solver: &'static str,
        iterate: Vec<f64>,
        report: Box<IterationReport>,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{interior} interior time levels cannot be split into {k} equal subdomains")]
    IndivisibleGrid { interior: usize, k: usize },
    #[error("overlap of {overlap} steps is too large for subdomains of {size} levels")]
    OverlapTooLarge { overlap: usize, size: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("subdomain {id} solve failed: {source}")]
    SubdomainSolveFailed {
        id: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("coarse solve failed: {0}")]
    CoarseSolveFailed(#[source] Box<Error>),
    #[error("the monotonicity probe needs exactly two nonoverlapping subdomains")]
    RequiresTwoSubdomains,
    #[error("no convergence within {} iterations", .0.iterations)]
    MaxItersExceeded(Box<IterationReport>),
}
