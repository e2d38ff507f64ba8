use thiserror::Error;

/// Errors raised by the simulator and the verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("dimension mismatch: expected {expected} modes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadrature did not reach relative tolerance {tolerance:e} (last change {achieved:e})")]
    Quadrature { tolerance: f64, achieved: f64 },

    #[error(
        "implicit step did not converge after {iterations} iterations \
         (residual {residual:e} > {tolerance:e}); try a smaller time step"
    )]
    SolverDivergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("solver failure at t = {time}: {source}")]
    SolverAt {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("interval ({start}, {end}] lies outside [0, {horizon}]")]
    Interval { start: f64, end: f64, horizon: f64 },

    #[error("inequality `{name}` violated (slack {slack:e}) at witness {witness}")]
    Violation {
        name: &'static str,
        slack: f64,
        witness: String,
    },

    #[error("{0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            constraint: "must be finite",
        })
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            constraint: "must be positive and finite",
        })
    }
}
