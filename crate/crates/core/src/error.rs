use thiserror::Error;

use crate::params::ValidationReport;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}")]
    NoBracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("quadrature tolerance {tol:e} not met, error estimate {estimate:e}")]
    ToleranceNotMet { tol: f64, estimate: f64 },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidationReport),
    #[error("price {name} = {value} outside [{lo}, {hi}]")]
    PriceOutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("no branch-consistent demand equilibrium; candidates {candidates:?}")]
    NoConsistentBranch { candidates: Vec<f64> },
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("strategy not offered: no price yields positive profit")]
    NotOffered,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub(crate) fn check_valid<P: crate::params::Validate>(p: &P) -> Result<(), SolveError> {
    let r = p.validate();
    if r.is_ok() {
        Ok(())
    } else {
        Err(SolveError::InvalidParams(r))
    }
}

pub(crate) fn check_price(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), SolveError> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(SolveError::PriceOutOfRange { name, value, lo, hi })
    }
}
