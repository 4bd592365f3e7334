use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The exponent was evaluated on (or numerically at) one of its poles.
    #[error("Lévy exponent evaluated at pole {pole} (z = {z})")]
    Pole { z: Complex64, pole: f64 },

    #[error("root classification failed: expected {expected_up} roots with Re > 0 and {expected_down} with Re < 0, found {found_up} and {found_down}")]
    RootCount {
        expected_up: usize,
        expected_down: usize,
        found_up: usize,
        found_down: usize,
    },

    #[error("root {root} collides with a pole or another root (distance {distance:e})")]
    RootCollision { root: Complex64, distance: f64 },

    #[error("root solver did not converge (q = {q}, residual {residual:e})")]
    RootConvergence { q: Complex64, residual: f64 },

    #[error("matrix `{what}` is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { what: &'static str, condition: f64 },

    #[error("transform returned a non-finite value at s = {s}")]
    NonFinite { s: Complex64 },

    #[error("denominator `{what}` vanishes (|value| = {magnitude:e})")]
    Singularity { what: &'static str, magnitude: f64 },

    #[error("fee equation not bracketed: gap({lo}) = {gap_lo}, gap({hi}) = {gap_hi}")]
    NoBracket {
        lo: f64,
        hi: f64,
        gap_lo: f64,
        gap_hi: f64,
    },

    #[error("fee solver did not converge after {iterations} iterations")]
    SolverConvergence { iterations: usize },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be non-negative and finite, got {value}"),
        ))
    }
}
