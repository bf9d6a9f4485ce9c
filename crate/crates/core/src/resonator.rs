//! Two-mass truss resonator: closed-form frequencies and stiffness tuning.
//!
//! Each mass hangs from a fixed deck on two bars at `±beta` from the vertical
//! and the masses are joined by a horizontal bar. Horizontal and vertical
//! motions decouple, giving two horizontal modes (`f_a > f_b`) and one
//! vertical mode per mass (`f_c`, `f_d`).

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellSpec, Geometry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrussResonator {
    /// Masses per unit depth [kg/m].
    pub m1: f64,
    pub m2: f64,
    /// Diagonal bar spring constant per unit depth [Pa].
    pub gamma: f64,
    /// Horizontal bar spring constant per unit depth [Pa].
    pub gamma1: f64,
    /// Diagonal bar angle from the vertical [rad].
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrussSpectrum {
    pub f_a: f64,
    pub f_b: f64,
    pub f_c: f64,
    pub f_d: f64,
    /// `min(f_b, f_c, f_d)`.
    pub f_star: f64,
}

impl TrussSpectrum {
    /// The four frequencies in ascending order.
    pub fn sorted(&self) -> [f64; 4] {
        let mut out = [self.f_a, self.f_b, self.f_c, self.f_d];
        out.sort_by(f64::total_cmp);
        out
    }
}

impl TrussResonator {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.m1, self.m2, self.gamma, self.gamma1, self.beta].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("truss parameters must be finite"));
        }
        if !(self.m1 > 0.0 && self.m2 > 0.0) {
            return Err(Error::invalid(format!("masses must be positive, got {} and {}", self.m1, self.m2)));
        }
        if !(self.gamma >= 0.0 && self.gamma1 >= 0.0) {
            return Err(Error::invalid("link stiffnesses must be non-negative"));
        }
        if !(self.beta > 0.0 && self.beta < 0.5 * PI) {
            return Err(Error::invalid(format!("link angle must lie in (0, pi/2), got {}", self.beta)));
        }
        Ok(())
    }

    /// Lumped truss of a resonator deck cell: disk masses `rho * pi * r^2`.
    pub fn from_cell(spec: &CellSpec) -> Result<Self> {
        let Geometry::DeckWithResonators { resonators, .. } = &spec.geometry else {
            return Err(Error::invalid("cell has no truss resonator"));
        };
        let rho = spec.material("disk")?.rho();
        let [r1, r2] = resonators.disk_radii;
        let out = TrussResonator {
            m1: rho * PI * r1 * r1,
            m2: rho * PI * r2 * r2,
            gamma: resonators.diagonal_stiffness,
            gamma1: resonators.horizontal_stiffness,
            beta: resonators.link_angle,
        };
        out.validate()?;
        Ok(out)
    }
}

/// Closed-form frequencies of the truss [Hz].
pub fn truss_frequencies(r: &TrussResonator) -> Result<TrussSpectrum> {
    r.validate()?;
    let (s2, c2) = (r.beta.sin().powi(2), r.beta.cos().powi(2));
    let g = r.gamma * s2;
    let q = ((r.m1 - r.m2) / (r.m1 + r.m2)).powi(2);
    let disc = (r.gamma1 * r.gamma1 + 4.0 * q * g * (r.gamma1 + g)).max(0.0).sqrt();
    let pre = (1.0 / r.m1 + 1.0 / r.m2) / (8.0 * PI * PI);
    let f_a = (pre * (r.gamma1 + 2.0 * g + disc)).sqrt();
    // The minus branch cancels; the product of the roots gives it accurately.
    let product = r.gamma * s2 * (r.gamma * s2 + r.gamma1) / (r.m1 * r.m2) / (4.0 * PI.powi(4));
    let f_b = if f_a > 0.0 { (product / (f_a * f_a)).max(0.0).sqrt() } else { 0.0 };
    let f_c = (r.gamma * c2 / (2.0 * r.m1 * PI * PI)).sqrt();
    let f_d = (r.gamma * c2 / (2.0 * r.m2 * PI * PI)).sqrt();
    Ok(TrussSpectrum { f_a, f_b, f_c, f_d, f_star: f_b.min(f_c).min(f_d) })
}

/// 4x4 stiffness of the truss in DOF order `(x1, y1, x2, y2)`, deck ends fixed.
pub fn truss_stiffness(r: &TrussResonator) -> [[f64; 4]; 4] {
    let mut k = [[0.0; 4]; 4];
    let (s, c) = r.beta.sin_cos();
    // Diagonals: fixed far end, so only the mass block of the bar matrix remains.
    for mass in 0..2 {
        for sign in [-1.0, 1.0] {
            let e = [sign * s, c];
            for i in 0..2 {
                for j in 0..2 {
                    k[2 * mass + i][2 * mass + j] += r.gamma * e[i] * e[j];
                }
            }
        }
    }
    let e = [1.0, 0.0];
    for i in 0..2 {
        for j in 0..2 {
            let v = r.gamma1 * e[i] * e[j];
            k[i][j] += v;
            k[2 + i][2 + j] += v;
            k[i][2 + j] -= v;
            k[2 + i][j] -= v;
        }
    }
    k
}

/// Frequencies [Hz] and mode shapes of the truss by dense eigensolve, ascending.
///
/// Independent of [`truss_frequencies`]: the bar matrices are assembled
/// directly and the mass-scaled matrix is diagonalized numerically.
pub fn truss_matrix_modes(r: &TrussResonator) -> Result<Vec<(f64, [f64; 4])>> {
    r.validate()?;
    let k = truss_stiffness(r);
    let m = [r.m1, r.m1, r.m2, r.m2];
    let a = Mat::<f64>::from_fn(4, 4, |i, j| k[i][j] / (m[i] * m[j]).sqrt());
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Integrity(format!("truss eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut out: Vec<(f64, [f64; 4])> = (0..4)
        .map(|j| {
            let shape = std::array::from_fn(|i| evd.U()[(i, j)] / m[i].sqrt());
            (s[j].max(0.0).sqrt() / (2.0 * PI), shape)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Frequencies of [`truss_matrix_modes`] alone.
pub fn truss_matrix_oracle(r: &TrussResonator) -> Result<[f64; 4]> {
    let modes = truss_matrix_modes(r)?;
    Ok(std::array::from_fn(|i| modes[i].0))
}

/// Horizontal-link stiffness placing `f_a` at `f_target` [Hz].
///
/// `f_a` grows monotonically with `gamma1`, so the root is bracketed from
/// `gamma1 = 0` and refined by bisection.
pub fn tune_gamma1(r: &TrussResonator, f_target: f64) -> Result<f64> {
    r.validate()?;
    let fa = |gamma1: f64| truss_frequencies(&TrussResonator { gamma1, ..*r }).map(|s| s.f_a);
    let f_min = fa(0.0)?;
    if !(f_target.is_finite() && f_target >= f_min) {
        return Err(Error::InfeasibleTarget { target: f_target, min: f_min, max: f64::INFINITY });
    }
    if f_target == f_min {
        return Ok(0.0);
    }
    let mut hi = r.gamma1.max(r.gamma).max(1.0);
    while fa(hi)? < f_target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InfeasibleTarget { target: f_target, min: f_min, max: fa(f64::MAX)? });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fa(mid)? < f_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
