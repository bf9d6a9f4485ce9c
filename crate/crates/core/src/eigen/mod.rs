//! Generalized Hermitian eigensolver for `K x = lambda M x`.
//!
//! `K` and `M` are complex Hermitian (real symmetric for periodic phases of
//! +-1 and for finite structures) and `M` is positive definite. Only a few
//! eigenpairs at the bottom of the spectrum, or just above a shift, are ever
//! needed, so large systems go through a shift-invert block Krylov iteration
//! and small ones through a dense Cholesky reduction.

mod dense;
mod krylov;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use dense::dense_pairs;
pub use krylov::krylov_pairs;

/// Systems with fewer unknowns than this are solved densely.
pub const DENSE_LIMIT: usize = 500;

/// Widest block tried before giving up.
pub const MAX_BLOCK: usize = 16;

/// Default relative residual bound for returned pairs.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Seed of the starting block; fixed so repeated solves are bitwise identical.
pub(crate) const START_SEED: u64 = 0x5eed_b10c;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    /// Dense below [`DENSE_LIMIT`], Krylov above.
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralRequest {
    pub n_pairs: usize,
    /// Only eigenvalues `>= shift` are returned. `None` means the bottom of the spectrum.
    pub shift: Option<f64>,
    pub tolerance: f64,
    /// Maximum number of Krylov restarts.
    pub max_iterations: usize,
    pub block_size: usize,
    pub path: SolverPath,
}

impl SpectralRequest {
    pub fn new(n_pairs: usize) -> Self {
        SpectralRequest {
            n_pairs,
            shift: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 60,
            block_size: 4,
            path: SolverPath::Auto,
        }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn with_path(mut self, path: SolverPath) -> Self {
        self.path = path;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::invalid("at least one eigenpair must be requested"));
        }
        if self.n_pairs > dim {
            return Err(Error::invalid(format!(
                "requested {} eigenpairs from a system of dimension {dim}",
                self.n_pairs
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(Error::invalid(format!("tolerance must lie in (0, 1e-4], got {}", self.tolerance)));
        }
        if self.block_size == 0 || self.max_iterations == 0 {
            return Err(Error::invalid("block size and iteration budget must be positive"));
        }
        if let Some(s) = self.shift {
            if !s.is_finite() {
                return Err(Error::invalid("shift must be finite"));
            }
        }
        Ok(())
    }
}

/// Eigenpairs in ascending eigenvalue order with `M`-orthonormal vectors.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    /// `||K x - lambda M x|| / ||K x||`-type relative residual of each pair.
    pub residuals: Vec<f64>,
    /// Rounding floor of each residual; below it a residual cannot be reduced.
    pub floors: Vec<f64>,
    /// Largest `|Im(x^H K x)| / max|lambda|` seen before the imaginary parts were dropped.
    pub max_imaginary: f64,
}

/// Smallest eigenpairs of the pencil `(K, M)`, optionally restricted to `lambda >= shift`.
pub fn smallest_pairs(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, req: &SpectralRequest) -> Result<EigenPairs> {
    check_pencil(k, m)?;
    req.validate(k.nrows())?;
    let dense = match req.path {
        SolverPath::Dense => true,
        SolverPath::Krylov => false,
        SolverPath::Auto => k.nrows() < DENSE_LIMIT,
    };
    if dense {
        return dense_pairs(k, m, req);
    }
    // Clusters wider than the block stall the iteration; widen and retry.
    let mut attempt = req.clone();
    loop {
        match krylov_pairs(k, m, &attempt) {
            Err(Error::NonConvergence { .. }) if attempt.block_size < MAX_BLOCK => attempt.block_size *= 2,
            other => return other,
        }
    }
}

fn check_pencil(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>) -> Result<()> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::invalid(format!(
            "pencil dimensions differ: K is {}x{}, M is {}x{}",
            k.nrows(),
            k.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("empty system"));
    }
    if let Some(i) = m.diagonal().iter().position(|d| !(d.re > 0.0) || d.im != 0.0) {
        return Err(Error::Integrity(format!("mass matrix is not positive definite (diagonal entry {i})")));
    }
    Ok(())
}

/// Relative size of the automatic negative offset applied to the shift.
const SHIFT_OFFSET: f64 = 1e-9;

/// The requested shift moved slightly down, so that an eigenvalue sitting
/// exactly on it (a rigid-body zero, say) does not make `K - sigma M` singular.
pub(crate) fn effective_shift(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>, req: &SpectralRequest) -> f64 {
    req.shift.unwrap_or(0.0) - SHIFT_OFFSET * stiffness_scale(k, m)
}

/// `max_i K_ii / M_ii`, an upper estimate of the spectrum.
pub fn stiffness_scale(k: &CsrMatrix<Complex64>, m: &CsrMatrix<Complex64>) -> f64 {
    k.diagonal().iter().zip(m.diagonal()).map(|(kd, md)| kd.re.abs() / md.re).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

/// Eigenvalues below `ZERO_MODE_TOL * stiffness_scale` are numerically zero
/// (rigid-body motions and mechanisms).
pub const ZERO_MODE_TOL: f64 = 1e-14;

/// Residual measure shared by both paths.
///
/// The `||K|| ||x||` floor keeps near-zero (rigid-body) eigenvalues from being
/// measured against a vanishing `||K x||`.
pub(crate) fn relative_residual(
    k: &CsrMatrix<Complex64>,
    m: &CsrMatrix<Complex64>,
    k_norm: f64,
    lambda: f64,
    x: &[Complex64],
) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let res: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
    let kx_norm = norm(&kx);
    let floor = 1e-12 * k_norm * norm(x);
    res / kx_norm.max(floor).max(f64::MIN_POSITIVE)
}

/// Rounding floor of the residual measure: representing `x` to machine
/// precision already perturbs `K x` by about `eps ||K|| ||x||`.
pub(crate) fn residual_floor(k: &CsrMatrix<Complex64>, k_norm: f64, x: &[Complex64]) -> f64 {
    let kx = norm(&k.mul_vec(x));
    4.0 * f64::EPSILON * k_norm * norm(x) / kx.max(f64::MIN_POSITIVE)
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `x^H A x`.
pub(crate) fn quadratic_form(a: &CsrMatrix<Complex64>, x: &[Complex64]) -> Complex64 {
    a.mul_vec(x).iter().zip(x).map(|(ax, xi)| xi.conj() * ax).sum()
}
