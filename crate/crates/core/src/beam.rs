//! Euler-Bernoulli beam on simple supports repeated every span.
//!
//! Between supports the beam is free; at each support the deflection
//! vanishes, slope and moment are continuous and the shear force jumps by
//! the reaction. Eliminating the shear from the span transfer matrix leaves a
//! 2x2 map on (slope, moment) whose eigenvalues are the Bloch factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellSpec, Geometry};
use crate::material::Material;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    /// Span between supports [m].
    pub span: f64,
    /// Bending stiffness per unit depth [N m].
    pub ei: f64,
    /// Mass per unit length and depth [kg/m^2].
    pub rho_a: f64,
}

impl BeamSpec {
    /// Plate strip of thickness `s`: bending stiffness uses the plane-strain
    /// modulus `E / (1 - nu^2)` to match a 2D plane-strain model.
    pub fn plate_strip(material: &Material, thickness: f64, span: f64) -> Result<Self> {
        let out = BeamSpec {
            span,
            ei: material.plane_strain_modulus() * thickness.powi(3) / 12.0,
            rho_a: material.rho() * thickness,
        };
        out.validate()?;
        Ok(out)
    }

    /// Beam equivalent of a plain or resonator deck cell (resonators ignored).
    pub fn from_cell(spec: &CellSpec) -> Result<Self> {
        match &spec.geometry {
            Geometry::DeckPlain { deck_thickness, .. } | Geometry::DeckWithResonators { deck_thickness, .. } => {
                Self::plate_strip(&spec.material("deck")?, *deck_thickness, spec.period)
            }
            _ => Err(Error::invalid("beam model applies to deck cells only")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.span, self.ei, self.rho_a].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("beam parameters must be positive: {self:?}")))
        }
    }

    /// Dimensionless `beta * span` at frequency `f` [Hz].
    pub fn wave_parameter(&self, f: f64) -> f64 {
        let omega = 2.0 * PI * f;
        (self.rho_a * omega * omega / self.ei).powf(0.25) * self.span
    }

    /// Frequency [Hz] at which `beta * span = x`.
    pub fn frequency(&self, x: f64) -> f64 {
        (x / self.span).powi(2) * (self.ei / self.rho_a).sqrt() / (2.0 * PI)
    }

    /// Fundamental of a single pinned-pinned span [Hz].
    pub fn pinned_fundamental(&self) -> f64 {
        self.frequency(PI)
    }
}

/// `cos(kd)` at `x = beta * span`.
///
/// The hyperbolic terms are divided out by `e^x / 2`, so the value stays
/// finite for any `x`.
pub fn cos_kd(x: f64) -> f64 {
    let q = (-2.0 * x).exp();
    let e = 2.0 * (-x).exp();
    let (s, c) = x.sin_cos();
    ((1.0 - q) * c - (1.0 + q) * s) / ((1.0 - q) - e * s)
}

/// Field transfer matrix of a free span for state `(w, slope, moment, shear)`.
///
/// Built from the Krylov functions; grows like `e^x`, so intended for
/// moderate `x` (it is the reference the scaled formula is checked against).
pub fn span_transfer(spec: &BeamSpec, f: f64) -> [[f64; 4]; 4] {
    let x = spec.wave_parameter(f);
    let b = x / spec.span;
    let (ch, sh, c, s) = (x.cosh(), x.sinh(), x.cos(), x.sin());
    let k0 = 0.5 * (ch + c);
    let k1 = 0.5 * (sh + s);
    let k2 = 0.5 * (ch - c);
    let k3 = 0.5 * (sh - s);
    let ei = spec.ei;
    // w'''' = b^4 w with M = -EI w'' and V = -EI w'''.
    [
        [k0, k1 / b, -k2 / (ei * b * b), -k3 / (ei * b.powi(3))],
        [b * k3, k0, -k1 / (ei * b), -k2 / (ei * b * b)],
        [-ei * b * b * k2, -ei * b * k3, k0, k1 / b],
        [-ei * b.powi(3) * k1, -ei * b * b * k2, b * k3, k0],
    ]
}

/// 2x2 map of (slope, moment) from one support to the next.
pub fn support_transfer(spec: &BeamSpec, f: f64) -> [[f64; 2]; 2] {
    let t = span_transfer(spec, f);
    // Zero deflection at the far support fixes the shear just past the near one.
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = t[i + 1][j + 1] - t[i + 1][3] * t[0][j + 1] / t[0][3];
        }
    }
    out
}

/// Real Bloch phases `kd` in `[0, pi]` at frequency `f` [Hz]; empty inside a stop band.
pub fn beam_dispersion(spec: &BeamSpec, f: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(f > 0.0 && f.is_finite()) {
        return Err(Error::invalid(format!("frequency must be positive, got {f}")));
    }
    let g = cos_kd(spec.wave_parameter(f));
    if !g.is_finite() {
        return Err(Error::Integrity(format!("beam dispersion overflowed at f = {f} Hz")));
    }
    Ok(if g.abs() <= 1.0 { vec![g.acos()] } else { Vec::new() })
}

/// Pass bands `(f_lo, f_hi)` [Hz] of the lowest `n_bands` flexural branches.
///
/// Band `n` opens at the pinned-pinned frequency `x = n pi` and closes where
/// `cos(kd)` reaches the opposite sign, found by bisection.
pub fn beam_band_edges(spec: &BeamSpec, n_bands: usize) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    if n_bands == 0 {
        return Err(Error::invalid("n_bands must be at least 1"));
    }
    let mut out = Vec::with_capacity(n_bands);
    for n in 1..=n_bands {
        let target = if n % 2 == 0 { -1.0 } else { 1.0 };
        let h = |x: f64| (cos_kd(x) - target) * target;
        let lo_x = n as f64 * PI;
        // h < 0 in the band, > 0 past its upper edge; find the first crossing.
        let steps = 256;
        let dx = PI / steps as f64;
        let mut bracket = None;
        for i in 1..steps {
            let (a, b) = (lo_x + (i - 1) as f64 * dx, lo_x + i as f64 * dx);
            if i > 1 && h(a) <= 0.0 && h(b) > 0.0 || i == 1 && h(b) > 0.0 {
                bracket = Some((a.max(lo_x + 1e-12), b));
                break;
            }
        }
        let (mut a, mut b) = bracket.ok_or_else(|| Error::Bisection {
            lo: spec.frequency(lo_x),
            hi: spec.frequency(lo_x + PI),
            reason: format!("no upper edge found for band {n}"),
        })?;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if h(m) <= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        out.push((spec.frequency(lo_x), spec.frequency(0.5 * (a + b))));
    }
    Ok(out)
}

/// Frequency [Hz] of flexural band `band` (1-based) at Bloch phase `kd` in `[0, pi]`.
pub fn beam_frequency_at(spec: &BeamSpec, kd: f64, band: usize) -> Result<f64> {
    if !(0.0..=PI).contains(&kd) {
        return Err(Error::invalid(format!("kd must lie in [0, pi], got {kd}")));
    }
    let (lo, hi) = *beam_band_edges(spec, band)?.last().expect("band requested");
    let (mut a, mut b) = (spec.wave_parameter(lo), spec.wave_parameter(hi));
    let target = kd.cos();
    // cos(kd) moves monotonically from (-1)^band to its opposite across the band.
    let sign = if band.is_multiple_of(2) { 1.0 } else { -1.0 };
    let h = |x: f64| (cos_kd(x) - target) * sign;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if h(m) >= 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(spec.frequency(0.5 * (a + b)))
}
