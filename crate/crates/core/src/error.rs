use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("replacement matrix must be square with at least 2 colours (got {rows}x{cols})")]
    Shape { rows: usize, cols: usize },
    #[error("initial composition has length {got}, expected {expected}")]
    CompositionLength { got: usize, expected: usize },
    #[error("initial composition must be non-negative and not all zero")]
    EmptyComposition,
    #[error("at most {max} colours are supported (got {got})")]
    TooManyColours { got: usize, max: usize },
    #[error("entry {value} exceeds the supported magnitude {max}")]
    EntryTooLarge { value: i64, max: i64 },
    #[error("row {row} sums to {sum}, but row 0 sums to {expected}")]
    RowSumMismatch { row: usize, sum: i64, expected: i64 },
    #[error("balance must be positive (got {0})")]
    NonPositiveBalance(i64),
    #[error("urn is not tenable: {0}")]
    NotTenable(String),
    #[error("urn is not irreducible: colour {to} cannot be reached from colour {from}")]
    NotIrreducible { from: usize, to: usize },
    #[error("drawing colour {colour} would make coordinate {coordinate} negative")]
    TenabilityViolation { colour: usize, coordinate: usize },
    #[error("Jordan structure of eigenvalue {eigenvalue} is numerically ambiguous ({detail})")]
    DegenerateStructure { eigenvalue: String, detail: String },
    #[error("no eigenvalue within {tol:e} of {target}")]
    EigenvalueNotFound { target: String, tol: f64 },
    #[error("block for eigenvalue {0} is not large (Re λ / S must lie in (1/2, 1))")]
    BlockNotLarge(String),
    #[error("block for eigenvalue {0} is not small (Re λ / S must be at most 1/2)")]
    BlockNotSmall(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("moment diverges: {0}")]
    DivergentMoment(String),
    #[error("Gamma function pole at {0}")]
    PoleError(String),
    #[error("linear system is singular ({0})")]
    SingularSystem(String),
    #[error("empirical pool {0} is empty")]
    EmptyPool(usize),
    #[error("sample sizes differ ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("grid does not cover the circle |t| = {radius} with enough points ({points})")]
    GridTooCoarse { radius: f64, points: usize },
    #[error("no radius in the requested range has signal above the noise level")]
    NoiseDominated,
    #[error("pool {colour} mean {mean} drifted from target {target} (more than 5 standard errors)")]
    MeanDrift { colour: usize, mean: String, target: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
