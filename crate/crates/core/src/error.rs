use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} outside the supported range 1..=12")]
    Dimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not antisymmetric at ({0}, {1})")]
    NotAntisymmetric(usize, usize),

    #[error("pfaffian of odd dimension {0}")]
    OddDimension(usize),

    #[error("patodi formula needs at most dim V = {dim} factors, got {len}")]
    PatodiScope { dim: usize, len: usize },

    #[error("point {0:?} is outside the chart domain")]
    ChartDomain(Vec<f64>),

    #[error("unknown model `{name}`; registered models: {known}")]
    UnknownModel { name: String, known: String },

    #[error("model `{model}` does not support {what}")]
    Unsupported { model: String, what: &'static str },

    #[error("({p}, {q}) is off the line 2p + q = {line}")]
    OffLine { p: usize, q: usize, line: usize },

    #[error("quadrature did not converge: successive refinements differ by {0:e}")]
    Quadrature(f64),

    #[error("ambient and intrinsic boundary integrands disagree: {ambient} vs {intrinsic}")]
    ConventionMismatch { ambient: f64, intrinsic: f64 },

    #[error("local time must be nondecreasing (step {0})")]
    LocalTimeDecreasing(usize),

    #[error("{0} steps is too coarse (need at least {1})")]
    TooCoarse(usize, usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("not enough boundary hits to estimate moments at t = {0}")]
    InsufficientHits(f64),
}
