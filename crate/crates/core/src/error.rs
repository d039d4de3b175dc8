use thiserror::Error;

use crate::grid::{GridSpec, Rational};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: GridSpec, right: GridSpec },
    #[error("step {step} is not representable on a grid with p = {p}; refine to p = {required}")]
    StepNotRepresentable { step: Rational, p: usize, required: usize },
    #[error("finite derivative step must be nonzero")]
    ZeroStep,
    #[error("axis {axis} out of range for dimension {dim}")]
    InvalidAxis { axis: usize, dim: usize },
    #[error("cannot refine grid p = {p} to q = {q}: p does not divide q")]
    NotDivisible { p: usize, q: usize },
    #[error("operator grid p = {p} does not divide {level}! = {factorial}; use level >= {minimal_level}")]
    LevelTooSmall { p: usize, level: usize, factorial: usize, minimal_level: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("matrix size {k} exceeds the limit {limit}")]
    SizeLimit { k: usize, limit: usize },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix exponential overflowed (1-norm of t*B = {norm})")]
    ExpOverflow { norm: f64 },
    #[error("singular matrix at pivot {0}")]
    Singular(usize),
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("invalid supernatural number: {0}")]
    InvalidSupernatural(String),
    #[error(transparent)]
    Parse(#[from] crate::dsl::ParseError),
    #[error("lowering failed: {0}")]
    Lower(String),
    #[error("malformed data: {0}")]
    Malformed(String),
}
