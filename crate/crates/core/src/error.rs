use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("coordinate {index} is negative ({value:e})")]
    NegativeCoordinate { index: usize, value: f64 },

    #[error("coordinates sum to {sum}, which is not within {tolerance:e} of 1")]
    NotOnSimplex { sum: f64, tolerance: f64 },

    #[error("operator output left the simplex: {0}")]
    OutputDrift(Box<Error>),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("invalid mixing weights: {0}")]
    InvalidWeights(String),

    #[error("enumerating {m}! permutations exceeds the cap m <= {cap}")]
    EnumerationTooLarge { m: usize, cap: usize },

    #[error("budget must be positive")]
    ZeroBudget,

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("polytope generators are not irredundant; relative-interior queries need extreme generators")]
    RedundantGenerators,

    #[error("point lies outside the polytope")]
    OutsidePolytope,

    #[error("generator pool lacks the coordinate permutation {0:?}")]
    MissingPermutation(Vec<usize>),

    #[error("generator pool entry {index} is not certified bistochastic")]
    UncertifiedGenerator { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Unreadable, unwritable or unparsable file.
    #[error("{path}: {message}")]
    File { path: String, message: String },
}
