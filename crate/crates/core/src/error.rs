use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate parameter name `{0}`")]
    DuplicateParam(String),
    #[error("parameter `{0}` has no values")]
    EmptyValues(String),
    #[error("parameter `{name}` has a non-finite value ({value})")]
    NonFiniteValue { name: String, value: f64 },
    #[error("parameter `{name}` lists value `{value}` more than once")]
    DuplicateValue { name: String, value: String },
    #[error("search space declares no parameters")]
    EmptySpace,
    #[error("search space cardinality overflows a 64-bit count")]
    CardinalityOverflow,
    #[error("search space has {cardinality} points, above the enumeration guard of {guard}")]
    CardinalityGuard { cardinality: u64, guard: u64 },
    #[error("requested {requested} distinct points but only {available} remain")]
    InsufficientPoints { requested: u64, available: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Gaussian process needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite training target at position {0}")]
    NonFiniteTarget(usize),
    #[error("kernel matrix is not positive definite (jitter up to {max_jitter:e} tried)")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("invalid kernel configuration: {0}")]
    InvalidKernel(String),
    #[error("no kernel candidate could be factorized")]
    NoAdmissibleKernel,
    #[error("search space exhausted: every grid point has been evaluated")]
    SpaceExhausted,
    #[error("front point ({err}, {eng}) lies outside the reference box ({ref_err}, {ref_eng})")]
    OutsideReference { err: f64, eng: f64, ref_err: f64, ref_eng: f64 },
    #[error("template refers to unknown hyperparameter `{0}`")]
    UnknownHyperparameter(String),
    #[error("layer {layer}: {message}")]
    InvalidLayer { layer: String, message: String },
    #[error("objective table has no row for {0}")]
    MissingRow(String),
    #[error("objective table line {line}: {message}")]
    Table { line: u64, message: String },
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error("invalid objective value: {0}")]
    InvalidObjective(String),
}
