use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use super::bloch::BlochSystem;
use crate::eigen::{smallest_pairs, stiffness_scale, EigenPairs, SpectralRequest, ZERO_MODE_TOL};
use crate::error::{Error, Result};
use crate::geometry::TaggedMesh;

/// Residual bound a returned mode must meet, unless its rounding floor is higher.
pub const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Wavenumber [rad/m].
    pub k: f64,
    /// Ascending frequencies [Hz].
    pub frequencies: Vec<f64>,
    /// Full-mesh displacement per mode, two entries per node, mass-normalized.
    pub shapes: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    /// Numerically-zero modes (rigid motions, mechanisms) skipped below the returned ones.
    pub deflated: usize,
}

/// Lowest `n_modes` modes, or the lowest ones at or above `sigma_hz` when given.
///
/// Numerically-zero modes are deflated: they are solved for but not returned,
/// and the count is kept in [`ModeSet::deflated`].
pub fn solve_modes(system: &BlochSystem, n_modes: usize, sigma_hz: Option<f64>) -> Result<ModeSet> {
    solve_modes_with(system, SpectralRequest::new(n_modes), sigma_hz)
}

/// As [`solve_modes`], with explicit solver settings.
pub fn solve_modes_with(system: &BlochSystem, req: SpectralRequest, sigma_hz: Option<f64>) -> Result<ModeSet> {
    let n_modes = req.n_pairs;
    if n_modes == 0 || n_modes >= system.dim() {
        return Err(Error::invalid(format!("n_modes must lie in [1, {}), got {n_modes}", system.dim())));
    }
    let zero = ZERO_MODE_TOL * stiffness_scale(&system.stiffness, &system.mass);
    let shift = match sigma_hz {
        Some(s) if !(s >= 0.0 && s.is_finite()) => {
            return Err(Error::invalid(format!("shift must be a non-negative frequency, got {s}")))
        }
        Some(s) => Some((2.0 * PI * s).powi(2)),
        None => None,
    };

    // Common case first: a few spare pairs absorb the zero modes.
    let spare = match shift {
        Some(s) if s > zero => 0,
        _ => ZERO_SPARE.min(system.dim() - 1 - n_modes),
    };
    let mut first = SpectralRequest { n_pairs: n_modes + spare, shift, ..req.clone() };
    let mut pairs = smallest_pairs(&system.stiffness, &system.mass, &first)?;
    let mut deflated = pairs.values.iter().filter(|&&l| l <= zero).count();
    if pairs.values.len() - deflated < n_modes {
        first = SpectralRequest { n_pairs: n_modes, shift: Some(shift.unwrap_or(0.0).max(zero)), ..req };
        let above = smallest_pairs(&system.stiffness, &system.mass, &first)?;
        pairs = merge_zero(pairs, above, zero);
        deflated = pairs.values.iter().filter(|&&l| l <= zero).count();
    }
    let keep: Vec<usize> = (0..pairs.values.len()).filter(|&i| pairs.values[i] > zero).take(n_modes).collect();
    let residuals: Vec<f64> = keep.iter().map(|&i| pairs.residuals[i]).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if keep.iter().any(|&i| pairs.residuals[i] > CERTIFY_TOL.max(pairs.floors[i])) {
        return Err(Error::NonConvergence { iterations: first.max_iterations, worst_residual: worst, residuals });
    }
    let frequencies = keep.iter().map(|&i| pairs.values[i].sqrt() / (2.0 * PI)).collect();
    let shapes = keep.iter().map(|&i| system.dof_map.expand(&pairs.vectors[i])).collect();
    Ok(ModeSet { k: system.k, frequencies, shapes, residuals, deflated })
}

/// Spare pairs requested to absorb zero modes without a second solve.
const ZERO_SPARE: usize = 3;

/// Zero modes of the first solve followed by the pairs above them.
fn merge_zero(first: EigenPairs, above: EigenPairs, zero: f64) -> EigenPairs {
    let mut out = EigenPairs {
        values: Vec::new(),
        vectors: Vec::new(),
        residuals: Vec::new(),
        floors: Vec::new(),
        max_imaginary: above.max_imaginary,
    };
    for i in (0..first.values.len()).filter(|&i| first.values[i] <= zero) {
        out.values.push(first.values[i]);
        out.vectors.push(first.vectors[i].clone());
        out.residuals.push(first.residuals[i]);
        out.floors.push(first.floors[i]);
    }
    out.values.extend(above.values);
    out.vectors.extend(above.vectors);
    out.residuals.extend(above.residuals);
    out.floors.extend(above.floors);
    out
}

#[derive(Serialize)]
struct NodeDisplacement {
    id: usize,
    ux: [f64; 2],
    uy: [f64; 2],
}

#[derive(Serialize)]
struct ModeExport {
    k: f64,
    frequency_hz: f64,
    nodes: Vec<NodeDisplacement>,
}

impl ModeSet {
    /// JSON array of modes: frequency and per-node complex displacement `[re, im]`.
    pub fn to_json(&self) -> String {
        let modes: Vec<ModeExport> = self
            .frequencies
            .iter()
            .zip(&self.shapes)
            .map(|(&f, u)| ModeExport {
                k: self.k,
                frequency_hz: f,
                nodes: (0..u.len() / 2)
                    .map(|i| NodeDisplacement {
                        id: i,
                        ux: [u[2 * i].re, u[2 * i].im],
                        uy: [u[2 * i + 1].re, u[2 * i + 1].im],
                    })
                    .collect(),
            })
            .collect();
        serde_json::to_string_pretty(&modes).expect("modes serialize")
    }

    /// Whitespace-separated point data for one mode: `x y ux_re ux_im uy_re uy_im`.
    pub fn point_data(&self, mesh: &TaggedMesh, mode: usize) -> Result<String> {
        let u = self.shapes.get(mode).ok_or_else(|| Error::invalid(format!("mode {mode} not computed")))?;
        if u.len() != mesh.dof_count() {
            return Err(Error::invalid("mode shape does not belong to this mesh"));
        }
        let mut out = format!(
            "# k = {:.17e} rad/m, f = {:.17e} Hz\n# x y ux_re ux_im uy_re uy_im\n",
            self.k, self.frequencies[mode]
        );
        for (i, p) in mesh.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.9e} {:.9e} {:.9e} {:.9e} {:.9e} {:.9e}",
                p[0],
                p[1],
                u[2 * i].re,
                u[2 * i].im,
                u[2 * i + 1].re,
                u[2 * i + 1].im
            );
        }
        Ok(out)
    }
}
