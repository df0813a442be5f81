//! Computer algebra and dynamics for symplectic maps near an elliptic fixed
//! point: Lie-transform normal forms, high-order control terms, quantitative
//! divisor/norm estimates and numerical stability-domain evaluation.
//!
//! The crate is organized bottom-up:
//!
//! * [`poly`], [`field`], [`frame`] — sparse homogeneous polynomial algebra
//!   over complex coefficients and the real/complex coordinate change;
//! * [`lie`] — Lie derivatives, the `E_s` recursion, truncated transforms
//!   and their composition;
//! * [`rotation`], [`map`] — the elliptic linear part, explicit polynomial
//!   maps, and the rotation-plus-transform representation;
//! * [`normalform`], [`divisors`], [`estimates`] — the homological equation,
//!   order-by-order normalization, control-term synthesis and the small
//!   divisor / norm-bound machinery;
//! * [`dynamics`], [`geometry`] — map iteration, dynamical-aperture scans,
//!   invariant level curves and the apparent-convergence heuristic.

pub mod divisors;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod field;
pub mod frame;
pub mod geometry;
pub mod lie;
pub mod map;
pub mod normalform;
pub mod poly;
pub mod rotation;

pub use error::{Error, Result};
pub use field::{SymplecticityReport, VectorPoly};
pub use lie::{CoordinateMap, GeneratingSequence};
pub use map::{henon_map, MapRepresentation, PolyMap, RepresentationForm};
pub use poly::{Frame, HomogeneousPoly, MultiIndex};
pub use rotation::RotationSpec;
