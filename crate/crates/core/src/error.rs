//! Error type shared by the whole crate.

use std::fmt;

use crate::poly::Frame;

/// Errors reported by polynomial, Lie-transform and normal-form operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands live in different coordinate frames.
    FrameMismatch { expected: Frame, got: Frame },
    /// Add/sub of homogeneous polynomials of different degree.
    DegreeMismatch { left: usize, right: usize },
    /// Operands built over a different number of degrees of freedom.
    DofMismatch { left: usize, right: usize },
    /// Strict normalization hit monomials that are resonant (or numerically
    /// indistinguishable from resonant) at an order that had to be solved.
    Resonance { order: usize, monomials: Vec<String> },
    /// The (A, C) constants do not dominate the generating sequence norms.
    EstimateConstants { first_violating_order: usize, norm: f64, bound: f64 },
    /// Exhaustive divisor enumeration is only implemented for small dimension.
    DofTooLarge { n_dof: usize, max: usize },
    /// Catch-all for malformed inputs (bad config values, empty data, ...).
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::FrameMismatch { expected, got } => {
                write!(f, "frame mismatch: expected {expected}, got {got}")
            }
            Error::DegreeMismatch { left, right } => {
                write!(f, "degree mismatch: {left} vs {right}")
            }
            Error::DofMismatch { left, right } => {
                write!(f, "degrees of freedom mismatch: {left} vs {right}")
            }
            Error::Resonance { order, monomials } => {
                write!(f, "resonant monomials at order {order}: {}", monomials.join(", "))
            }
            Error::EstimateConstants { first_violating_order, norm, bound } => write!(
                f,
                "estimate constants rejected at order {first_violating_order}: \
                 |W_s| = {norm:e} exceeds C^(s-1) A = {bound:e}"
            ),
            Error::DofTooLarge { n_dof, max } => {
                write!(f, "divisor enumeration supports n <= {max}, got n = {n_dof}")
            }
            Error::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
