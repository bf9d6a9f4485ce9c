//! Plane-strain finite elements and Bloch-Floquet reduction.

mod assemble;
mod bloch;
pub mod element;
mod energy;
mod modes;

pub use assemble::{assemble, link_stiffness, GlobalMatrices};
pub use bloch::{apply_constraints, dof_map, BlochSystem, DofMap, HERMITIAN_TOL};
pub use energy::{rayleigh_frequency, strain_energy};
pub use modes::{solve_modes, solve_modes_with, ModeSet, CERTIFY_TOL};
