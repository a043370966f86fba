use thiserror::Error;

/// Errors raised by kernel constructors, observables and the oracle.
///
/// Variants are grouped loosely into input errors (malformed data) and
/// mathematical precondition failures (a singular matrix, a graph with no
/// perfect matching, ...). [`DppError::is_precondition`] tells them apart;
/// the CLI maps the two groups onto different exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DppError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index {index} out of bounds for ground set of size {size}")]
    IndexOutOfBounds { index: usize, size: usize },
    #[error("enumeration over {size} items exceeds the limit of {limit}")]
    EnumerationTooLarge { size: usize, limit: usize },

    #[error("partition function vanishes")]
    ZeroPartitionFunction,
    #[error("kernel is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("1 - K_I is numerically singular (rcond {rcond:e})")]
    SingularComplement { rcond: f64 },
    #[error("windows overlap at point {0}")]
    OverlappingWindows(usize),
    #[error("transition matrix is not loop-free")]
    NotLoopFree,
    #[error("Gram matrix is singular (rcond {rcond:e})")]
    SingularGram { rcond: f64 },
    #[error("required constant c[{layer_from},{layer_to};{index}] vanishes")]
    ZeroConstant {
        layer_from: usize,
        layer_to: usize,
        index: usize,
    },
    #[error("graph contains a directed cycle")]
    CycleDetected,
    #[error("a non-identity permutation admits vertex-disjoint paths")]
    CompatibilityViolated,
    #[error("1 + L is numerically singular (rcond {rcond:e})")]
    SingularOnePlusL { rcond: f64 },
    #[error("1 - K is numerically singular (rcond {rcond:e})")]
    SingularOneMinusK { rcond: f64 },
    #[error("1_Y + L is numerically singular (rcond {rcond:e})")]
    SingularConditional { rcond: f64 },
    #[error("face data is not a consistent planar embedding: {0}")]
    NotPlanarConsistent(String),
    #[error("graph has no perfect matching")]
    NoPerfectMatching,
    #[error("graph is disconnected")]
    Disconnected,
    #[error("argument {0} outside the validated range")]
    ArgumentOutOfRange(f64),
    #[error("Bessel order {0} outside the validated range")]
    OrderTooLarge(i64),
    #[error("conditional probability {re} + {im}i at point {point} is not in [0, 1]")]
    InvalidProbability { point: usize, re: f64, im: f64 },
    #[error("degenerate conditioning pivot at point {0}")]
    SingularPivot(usize),
}

impl DppError {
    /// Stable identifier used on the command line and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            DppError::InvalidInput(_) => "InvalidInput",
            DppError::DimensionMismatch(_) => "DimensionMismatch",
            DppError::IndexOutOfBounds { .. } => "IndexOutOfBounds",
            DppError::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            DppError::ZeroPartitionFunction => "ZeroPartitionFunction",
            DppError::NotHermitian { .. } => "NotHermitian",
            DppError::SingularComplement { .. } => "SingularComplement",
            DppError::OverlappingWindows(_) => "OverlappingWindows",
            DppError::NotLoopFree => "NotLoopFree",
            DppError::SingularGram { .. } => "SingularGram",
            DppError::ZeroConstant { .. } => "ZeroConstant",
            DppError::CycleDetected => "CycleDetected",
            DppError::CompatibilityViolated => "CompatibilityViolated",
            DppError::SingularOnePlusL { .. } => "SingularOnePlusL",
            DppError::SingularOneMinusK { .. } => "SingularOneMinusK",
            DppError::SingularConditional { .. } => "SingularConditional",
            DppError::NotPlanarConsistent(_) => "NotPlanarConsistent",
            DppError::NoPerfectMatching => "NoPerfectMatching",
            DppError::Disconnected => "Disconnected",
            DppError::ArgumentOutOfRange(_) => "ArgumentOutOfRange",
            DppError::OrderTooLarge(_) => "OrderTooLarge",
            DppError::InvalidProbability { .. } => "InvalidProbability",
            DppError::SingularPivot(_) => "SingularPivot",
        }
    }

    /// True for failures of a mathematical precondition, false for
    /// malformed or oversized input.
    pub fn is_precondition(&self) -> bool {
        !matches!(
            self,
            DppError::InvalidInput(_)
                | DppError::DimensionMismatch(_)
                | DppError::IndexOutOfBounds { .. }
                | DppError::EnumerationTooLarge { .. }
                | DppError::NotPlanarConsistent(_)
                | DppError::ArgumentOutOfRange(_)
                | DppError::OrderTooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, DppError>;
