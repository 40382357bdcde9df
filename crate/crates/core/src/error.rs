use thiserror::Error;

/// Errors raised by grid construction, operators, norms, decompositions and constants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtlError {
    #[error("negative value {value} at leaf {leaf}")]
    NegativeValue { leaf: usize, value: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value at leaf {leaf}")]
    NonFinite { leaf: usize },

    #[error("cube at level {level} is outside the truncated tree")]
    OutOfRangeCube { level: u32 },

    #[error("the root cube has no parent")]
    NoParent,

    #[error("bad exponent: {0}")]
    BadExponent(String),

    #[error("inputs live on different grids")]
    RootMismatch,

    #[error("refusing {work} units of work (cap {cap})")]
    ComplexityRefusal { work: u128, cap: u128 },

    #[error("measure vanishes on the requested cube")]
    ZeroMeasure,

    #[error("cube is not contained in the root of the decomposition")]
    OutsideRoot,

    #[error("cube is not a principal cube of the forest")]
    NotAPrincipalCube,

    #[error("powers of an atomic measure are undefined")]
    AtomicPowerUndefined,

    #[error("grid with dim {dim} and depth {depth} exceeds the leaf cap {cap}")]
    LeafCapExceeded { dim: usize, depth: u32, cap: u64 },
}

pub type Result<T> = std::result::Result<T, DtlError>;
