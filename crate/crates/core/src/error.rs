use crate::asymptotics::AsymptoticEstimate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("window {window} is not aligned with N = {n_cells} (window·N must be an integer)")]
    WindowAlignment { window: f64, n_cells: u64 },

    #[error("invalid grid level: {0}")]
    InvalidLevel(String),

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("discretised domain is empty")]
    EmptyDomain,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid functions live on different levels (N = {left} vs N = {right})")]
    LevelMismatch { left: u64, right: u64 },

    #[error("non-finite value {value} while sampling at {point:?}")]
    NonFiniteSample { point: Vec<f64>, value: f64 },

    #[error("invalid exponent p = {0}: Lp norms need p >= 1")]
    InvalidExponent(f64),

    #[error("test function support [{lo}, {hi}] is not strictly inside the window [-{window}, {window}]")]
    SupportOutsideWindow { lo: f64, hi: f64, window: f64 },

    #[error("at least {needed} samples are needed, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("quantity is not finite on the ladder (classification {:?})", .estimate.classification)]
    NotFinite { estimate: Box<AsymptoticEstimate> },

    #[error("grid function is not a grid distribution: action on test function #{index} is {:?}", .estimate.classification)]
    NotADistribution { index: usize, estimate: Box<AsymptoticEstimate> },

    #[error("measure window around {probe:?} holds {count} grid points, at least {needed} are required")]
    WindowUnderflow { probe: Vec<f64>, count: usize, needed: usize },

    #[error("grid function is not periodic with period {period} steps (mismatch {mismatch:e} at index {index:?})")]
    NotPeriodic { period: usize, index: Vec<i64>, mismatch: f64 },

    #[error("non-finite coefficient at {point:?}")]
    NonFiniteCoefficient { point: Vec<f64> },

    #[error("singular system: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("no convergence in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("relative residual {residual:e} exceeds the tolerance {tol:e}")]
    ResidualAboveTolerance { residual: f64, tol: f64 },

    #[error("conjugate gradient needs a symmetric system once boundary rows are eliminated")]
    NotSymmetric,

    #[error("right-hand side lives on a different domain than the assembled system")]
    DomainMismatch,

    #[error("time step failed at t = {time}: {source}")]
    StepFailed { time: f64, source: Box<Error> },

    #[error("at level N = {n_cells}: {source}")]
    AtLevel { n_cells: u64, source: Box<Error> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
