use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("requested rank {requested} exceeds the admissible maximum {max}")]
    RankRequestTooLarge { requested: usize, max: usize },
    #[error("pseudo-inverse of an all-zero matrix")]
    ZeroMatrix,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("frequency {0} outside [0, 1)")]
    FrequencyOutOfRange(f64),
    #[error("frequency {0} appears more than once")]
    DuplicateFrequency(f64),
    #[error("empty frequency set")]
    EmptyFrequencySet,
    #[error("invalid coherent group vector: {0}")]
    InvalidGroupVector(&'static str),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("invalid scenario: {0}")]
    InvalidConfig(&'static str),
    #[error("angle {0} degrees outside [-90, 90)")]
    AngleOutOfRange(f64),

    #[error("subarray length {m} must be between 1 and the sensor count {n}")]
    SubarrayTooLarge { m: usize, n: usize },

    #[error("signal subspace is degenerate: shifted block has rank below {k}")]
    DegenerateSubspace { k: usize },
    #[error("found only {found} local minima, {wanted} requested")]
    InsufficientMinima { found: usize, wanted: usize },
    #[error("MUSIC grid of {grid} points is below the minimum {min}")]
    GridTooCoarse { grid: usize, min: usize },

    #[error("frequency sets have different cardinality ({0} vs {1})")]
    CardinalityMismatch(usize, usize),
    #[error("a single frequency has no separation")]
    SingleFrequency,

    #[error("singular value gap is zero")]
    DegenerateGap,
    #[error("source covariance is not positive definite (lambda_K = {lambda_k:e})")]
    NotPositiveDefinite { lambda_k: f64 },
    #[error("array dimension {dim} is below K + 1 = {needed}")]
    DimensionTooSmall { dim: usize, needed: usize },
    #[error("snapshot count {l} below the required {required}")]
    PreconditionL { l: usize, required: usize },
    #[error("coherence structure does not reproduce the source covariance")]
    StructureMismatch,
}
