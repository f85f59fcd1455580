use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("no linearly independent basis found after {attempts} attempts (dim={dim}, entry_bound={entry_bound})")]
    DegenerateLattice {
        dim: usize,
        entry_bound: u32,
        attempts: usize,
    },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{what} requires {qubits} qubits, above the guard of {limit}")]
    GuardExceeded {
        what: &'static str,
        qubits: usize,
        limit: usize,
    },

    #[error("gamma = {gamma} lies within {tolerance} of a singular point of the literal pair formula")]
    NearSingularity { gamma: f64, tolerance: f64 },

    #[error("approximation order A={order} outside 1..={max}")]
    ApproxOrderOutOfRange { order: usize, max: usize },

    #[error("correlation undefined for a constant series")]
    ConstantSeries,

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegenerateLattice { .. } => "degenerate_lattice",
            Error::InvalidLattice(_) => "invalid_lattice",
            Error::GuardExceeded { .. } => "guard_exceeded",
            Error::NearSingularity { .. } => "near_singularity",
            Error::ApproxOrderOutOfRange { .. } => "approx_order_out_of_range",
            Error::ConstantSeries => "constant_series",
            Error::CheckFailed(_) => "check_failed",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
