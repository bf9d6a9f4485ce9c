//! Bloch-Floquet dispersion analysis of periodic elastic waveguides with
//! built-in resonators: plane-strain finite elements, a shift-invert
//! eigensolver, band-gap detection and closed-form resonator tuning.

// Negated comparisons are how inputs reject NaN; index loops mirror the element formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beam;
pub mod dispersion;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod material;
pub mod resonator;
pub mod sparse;

pub use error::{Error, Result};
pub use material::Material;
