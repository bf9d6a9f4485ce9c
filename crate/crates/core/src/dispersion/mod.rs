//! Brillouin-zone sweeps, band gaps and flat bands.
//!
//! Frequencies are normalized as `F = f d / v` with `v` the shear speed of
//! the host material. Bands are labelled by ascending order at each `k`.

mod output;
mod stack;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{apply_constraints, assemble, solve_modes, GlobalMatrices};
use crate::geometry::{build_cell, CellSpec, Resolution, TaggedMesh};

pub use output::svg_plot;
pub use stack::{finite_stack_modes, FiniteStack, LocalizationProbe, StackModes};

/// Default number of uniform samples on `[0, pi/d]`.
pub const DEFAULT_K_SAMPLES: usize = 48;

/// Gaps narrower than this (in `F`) are treated as numerical slivers.
pub const GAP_FLOOR: f64 = 1e-4;

/// Default bound on `|dF / d(kd)|` for a flat band.
pub const FLATNESS_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub n_k: usize,
    pub n_bands: usize,
    pub resolution: Resolution,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { n_k: DEFAULT_K_SAMPLES, n_bands: 8, resolution: Resolution::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionDiagram {
    /// Period `d` [m].
    pub period: f64,
    /// Normalizing shear speed `v` [m/s].
    pub shear_speed: f64,
    /// Wavenumbers [rad/m], ascending from 0 to `pi/d`.
    pub k: Vec<f64>,
    /// `frequencies[i][j]`: band `j` at `k[i]` [Hz], ascending in `j`.
    pub frequencies: Vec<Vec<f64>>,
}

impl DispersionDiagram {
    /// Builds a diagram from normalized values `F[i][j]` at the given `k d` samples.
    pub fn from_normalized(period: f64, shear_speed: f64, kd: &[f64], bands: Vec<Vec<f64>>) -> Result<Self> {
        if kd.len() != bands.len() || kd.is_empty() {
            return Err(Error::invalid("one band row is needed per k sample"));
        }
        let scale = shear_speed / period;
        Ok(DispersionDiagram {
            period,
            shear_speed,
            k: kd.iter().map(|x| x / period).collect(),
            frequencies: bands.into_iter().map(|row| row.into_iter().map(|f| f * scale).collect()).collect(),
        })
    }

    pub fn n_bands(&self) -> usize {
        self.frequencies.first().map_or(0, Vec::len)
    }

    pub fn kd(&self, i: usize) -> f64 {
        self.k[i] * self.period
    }

    pub fn normalize(&self, f: f64) -> f64 {
        f * self.period / self.shear_speed
    }

    /// Normalized values of band `j` along `k`.
    pub fn band(&self, j: usize) -> Vec<f64> {
        self.frequencies.iter().map(|row| self.normalize(row[j])).collect()
    }

    /// Lowest value of the top computed band: above it, uncomputed bands may
    /// exist, so gaps there are not trustworthy.
    pub fn reliable_ceiling(&self) -> f64 {
        self.band(self.n_bands() - 1).into_iter().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandGap {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

impl BandGap {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, f: f64) -> bool {
        self.lo < f && f < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlatBand {
    pub band: usize,
    /// Phase interval `[kd_lo, kd_hi]` over which the band stays flat.
    pub kd_lo: f64,
    pub kd_hi: f64,
    pub max_slope: f64,
    pub mean: f64,
}

/// Uniform `k` grid with `n_k` samples on `[0, pi/d]`.
pub fn k_grid(period: f64, n_k: usize) -> Vec<f64> {
    (0..n_k).map(|i| PI * i as f64 / ((n_k - 1) as f64 * period)).collect()
}

/// Dispersion diagram of a cell over the irreducible zone.
pub fn sweep(spec: &CellSpec, opts: &SweepOptions) -> Result<DispersionDiagram> {
    spec.validate()?;
    let mesh = build_cell(spec, opts.resolution)?;
    let global = assemble(&mesh)?;
    sweep_mesh(&mesh, &global, spec.host_material()?.shear_speed(), opts.n_k, opts.n_bands)
}

/// Sweep of an already assembled cell.
///
/// Numerically-zero modes present at every `k` are mechanisms and are left
/// out. Zero modes present only at some `k` (rigid translations of a free
/// cell at `k = 0`) are the feet of acoustic bands and enter as `f = 0`.
pub fn sweep_mesh(
    mesh: &TaggedMesh,
    global: &GlobalMatrices,
    shear_speed: f64,
    n_k: usize,
    n_bands: usize,
) -> Result<DispersionDiagram> {
    if n_k < 2 {
        return Err(Error::invalid(format!("a sweep needs at least 2 k samples, got {n_k}")));
    }
    if n_bands == 0 {
        return Err(Error::invalid("n_bands must be at least 1"));
    }
    let k = k_grid(mesh.period, n_k);
    let solved: Vec<Result<(Vec<f64>, usize)>> = k
        .par_iter()
        .map(|&kk| {
            let system = apply_constraints(global, mesh, kk)?;
            let modes = solve_modes(&system, n_bands, None)?;
            Ok((modes.frequencies, modes.deflated))
        })
        .collect();
    let mut rows = Vec::with_capacity(n_k);
    for (kk, r) in k.iter().zip(solved) {
        rows.push(r.map_err(|e| Error::SweepPoint { k: *kk, source: Box::new(e) })?);
    }
    let mechanisms = rows.iter().map(|r| r.1).min().unwrap_or(0);
    let frequencies = rows
        .into_iter()
        .map(|(f, deflated)| {
            let mut row = vec![0.0; deflated - mechanisms];
            row.extend(f);
            row.truncate(n_bands);
            row
        })
        .collect();
    Ok(DispersionDiagram { period: mesh.period, shear_speed, k, frequencies })
}

/// Stop bands below `f_max`: maximal open intervals free of band samples,
/// each band covering the closed range of its samples. Intervals not wider
/// than `floor` are dropped.
pub fn find_gaps(diagram: &DispersionDiagram, f_max: f64, floor: f64) -> Vec<BandGap> {
    let mut covered: Vec<(f64, f64)> = (0..diagram.n_bands())
        .map(|j| {
            let b = diagram.band(j);
            (b.iter().copied().fold(f64::INFINITY, f64::min), b.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    covered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut reach = 0.0f64;
    for (lo, hi) in covered {
        if lo >= f_max {
            break;
        }
        if lo - reach > floor {
            gaps.push(BandGap { lo: reach, hi: lo, width: lo - reach });
        }
        reach = reach.max(hi);
    }
    if f_max - reach > floor {
        gaps.push(BandGap { lo: reach, hi: f_max, width: f_max - reach });
    }
    gaps
}

/// Shortest phase interval that counts as a flat band.
pub const MIN_FLAT_SPAN: f64 = PI / 4.0;

/// Runs of samples within a band whose finite-difference slope `|dF / d(kd)|` stays below
/// `threshold` over at least [`MIN_FLAT_SPAN`]. Resonance branches that hybridize with a
/// crossing branch are split between ascending bands, so each flat piece is reported.
pub fn find_flat_bands(diagram: &DispersionDiagram, threshold: f64) -> Vec<FlatBand> {
    let n = diagram.k.len();
    if n < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for j in 0..diagram.n_bands() {
        let b = diagram.band(j);
        let slope = |i: usize| ((b[i] - b[i - 1]) / (diagram.kd(i) - diagram.kd(i - 1))).abs();
        let mut start = 0;
        for i in 1..=n {
            if i < n && slope(i) < threshold {
                continue;
            }
            // Samples start..i-1 form a run.
            let (lo, hi) = (diagram.kd(start), diagram.kd(i - 1));
            if i - 1 > start && hi - lo >= MIN_FLAT_SPAN * (1.0 - 1e-12) {
                let run = &b[start..i];
                out.push(FlatBand {
                    band: j,
                    kd_lo: lo,
                    kd_hi: hi,
                    max_slope: (start + 1..i).map(slope).fold(0.0, f64::max),
                    mean: run.iter().sum::<f64>() / run.len() as f64,
                });
            }
            start = i;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diagram(bands: &[(f64, f64)]) -> DispersionDiagram {
        let kd: Vec<f64> = (0..11).map(|i| PI * i as f64 / 10.0).collect();
        let rows = kd.iter().map(|x| bands.iter().map(|(a, b)| a + (b - a) * x / PI).collect()).collect();
        DispersionDiagram::from_normalized(1.0, 1.0, &kd, rows).unwrap()
    }

    #[test]
    fn gapless_band() {
        assert!(find_gaps(&diagram(&[(0.0, 1.0)]), 1.0, GAP_FLOOR).is_empty());
    }

    #[test]
    fn two_bands_two_gaps() {
        let gaps = find_gaps(&diagram(&[(0.0, 0.3), (0.5, 0.8)]), 1.0, GAP_FLOOR);
        assert_eq!(gaps.len(), 2);
        assert!((gaps[0].lo - 0.3).abs() < 1e-12 && (gaps[0].hi - 0.5).abs() < 1e-12);
        assert!((gaps[1].lo - 0.8).abs() < 1e-12 && (gaps[1].hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slivers_are_dropped() {
        let gaps = find_gaps(&diagram(&[(0.0, 0.3), (0.30005, 1.0)]), 1.0, GAP_FLOOR);
        assert!(gaps.is_empty());
    }

    #[test]
    fn flatness() {
        let d = diagram(&[(0.0, 0.2), (0.3, 0.3)]);
        let flat = find_flat_bands(&d, FLATNESS_THRESHOLD);
        assert_eq!(flat.len(), 1);
        assert_eq!(flat[0].band, 1);
        assert_eq!(flat[0].max_slope, 0.0);
        assert_eq!((flat[0].kd_lo, flat[0].kd_hi), (0.0, d.kd(10)));
    }

    #[test]
    fn flat_segments_of_a_bent_band() {
        // Rises over the first half of the zone, flat over the second.
        let kd: Vec<f64> = (0..11).map(|i| PI * i as f64 / 10.0).collect();
        let rows = kd.iter().map(|&x| vec![0.1 * x.min(PI / 2.0)]).collect();
        let d = DispersionDiagram::from_normalized(1.0, 1.0, &kd, rows).unwrap();
        let flat = find_flat_bands(&d, FLATNESS_THRESHOLD);
        assert_eq!(flat.len(), 1);
        assert!((flat[0].kd_lo - PI / 2.0).abs() < 1e-12 && flat[0].kd_hi == d.kd(10));
        assert!((flat[0].mean - 0.05 * PI).abs() < 1e-12);
        // A flat stretch shorter than the minimum span is not reported.
        let rows = kd.iter().map(|&x| vec![0.1 * x.min(0.9 * PI)]).collect();
        let d = DispersionDiagram::from_normalized(1.0, 1.0, &kd, rows).unwrap();
        assert!(find_flat_bands(&d, FLATNESS_THRESHOLD).is_empty());
    }
}
