use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("at least one oscillator frequency is required")]
    NoFrequencies,

    #[error("frequency omega[{index}] = {value} must be positive and finite")]
    NonPositiveFrequency { index: usize, value: f64 },

    #[error("duplicate frequencies: omega[{first}] == omega[{second}] (frequencies must be pairwise distinct)")]
    DuplicateFrequency { first: usize, second: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid quadrature config: {0}")]
    Quadrature(String),

    #[error("gradient of the limit support function is undefined at z = 0")]
    ConePoint,

    #[error("zero state: {0} is undefined at the origin")]
    ZeroState(&'static str),

    #[error("time horizon must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("control bound U must lie in (0, 1], got {0}")]
    ControlBound(f64),

    #[error("gauge solver did not converge after {iterations} iterations (residual {residual:e})")]
    GaugeNotConverged { iterations: usize, residual: f64 },

    #[error("bisection bracket could not be established: {0}")]
    Bracket(String),

    #[error("singular dynamics: {0}")]
    Singular(String),

    #[error("canonical form inconsistency: {0}")]
    Canonical(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
