use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An intermediate height exceeded the exponential overflow guard.
    #[error("overflow: height {height} exceeds guard {guard}")]
    Overflow { height: f64, guard: f64 },

    /// The Zorich map omits the origin.
    #[error("the origin has no preimage under the Zorich map")]
    NoPreimage,

    #[error("point lies within {radius} of a non-differentiability locus")]
    NotDifferentiable { radius: f64 },

    #[error("map could not be evaluated inside the difference stencil: {0}")]
    NotEvaluable(String),

    #[error("degenerate Jacobian (|det| = {0:e})")]
    Degenerate(f64),

    #[error("every grid point was excluded from the scan")]
    EmptyScan,

    #[error("cannot render an empty grid")]
    EmptyImage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
