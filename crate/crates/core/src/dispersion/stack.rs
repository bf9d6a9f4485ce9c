use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::fem::{apply_constraints, assemble, solve_modes, BlochSystem, ModeSet};
use crate::geometry::{build_cell, replicate_stack, CellSpec, Resolution, TaggedMesh};

/// Modes of a finite stack of cells standing on a clamped base.
#[derive(Debug, Clone)]
pub struct StackModes {
    pub n_cells: usize,
    pub modes: ModeSet,
    /// `F = f d / v` with the cell period `d`.
    pub normalized: Vec<f64>,
    /// Mean displacement on the exterior walls over mean displacement on the
    /// resonators, per mode; `None` without resonators.
    pub localization: Option<Vec<f64>>,
}

/// Exterior-wall to resonator ratio of mean nodal displacement magnitudes.
///
/// The exterior is the host's two outer faces parallel to the periodicity
/// axis; small ratios mean the motion is confined to the resonators.
#[derive(Debug, Clone)]
pub struct LocalizationProbe {
    exterior: Vec<usize>,
    resonator: Vec<usize>,
}

impl LocalizationProbe {
    /// `None` for meshes without resonators.
    pub fn new(mesh: &TaggedMesh) -> Option<Self> {
        let resonator: Vec<usize> = mesh.region_nodes(|r| r.is_resonator()).into_iter().collect();
        (!resonator.is_empty()).then(|| LocalizationProbe { exterior: exterior_nodes(mesh), resonator })
    }

    pub fn ratio(&self, shape: &[num_complex::Complex64]) -> f64 {
        let mean = |nodes: &[usize]| {
            nodes.iter().map(|&i| (shape[2 * i].norm_sqr() + shape[2 * i + 1].norm_sqr()).sqrt()).sum::<f64>()
                / nodes.len().max(1) as f64
        };
        mean(&self.exterior) / mean(&self.resonator).max(f64::MIN_POSITIVE)
    }
}

/// An assembled finite stack, reusable for solves at several shifts.
pub struct FiniteStack {
    pub mesh: TaggedMesh,
    system: BlochSystem,
    cell_period: f64,
    shear_speed: f64,
    probe: Option<LocalizationProbe>,
}

impl FiniteStack {
    pub fn new(spec: &CellSpec, n_cells: usize, resolution: Resolution) -> Result<Self> {
        spec.validate()?;
        let cell = build_cell(spec, resolution)?;
        let mesh = replicate_stack(&cell, n_cells)?;
        let global = assemble(&mesh)?;
        // No periodic pairs remain, so the phase is irrelevant.
        let system = apply_constraints(&global, &mesh, 0.0)?;
        Ok(FiniteStack {
            system,
            cell_period: spec.period,
            shear_speed: spec.host_material()?.shear_speed(),
            probe: LocalizationProbe::new(&mesh),
            mesh,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.cells
    }

    pub fn dof_count(&self) -> usize {
        self.system.dim()
    }

    /// Lowest `n_modes` modes at or above `shift_hz`.
    pub fn modes(&self, n_modes: usize, shift_hz: Option<f64>) -> Result<StackModes> {
        let modes = solve_modes(&self.system, n_modes, shift_hz)?;
        let normalized = modes.frequencies.iter().map(|f| f * self.cell_period / self.shear_speed).collect();
        let localization = self.probe.as_ref().map(|p| modes.shapes.iter().map(|u| p.ratio(u)).collect());
        Ok(StackModes { n_cells: self.n_cells(), modes, normalized, localization })
    }
}

/// Host nodes on the two outer faces parallel to the stack axis.
fn exterior_nodes(mesh: &TaggedMesh) -> Vec<usize> {
    let t = 1 - mesh.axis.index();
    let (lo, hi) = mesh.nodes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[t]), b.max(p[t])));
    let tol = 1e-9 * (hi - lo).max(mesh.period);
    let resonator: BTreeSet<usize> = mesh.region_nodes(|r| r.is_resonator());
    (0..mesh.node_count())
        .filter(|&i| !resonator.contains(&i))
        .filter(|&i| (mesh.nodes[i][t] - lo).abs() <= tol || (mesh.nodes[i][t] - hi).abs() <= tol)
        .collect()
}

/// Lowest `n_modes` modes of `n_cells` stacked copies of `spec`.
pub fn finite_stack_modes(
    spec: &CellSpec,
    n_cells: usize,
    n_modes: usize,
    resolution: Resolution,
) -> Result<StackModes> {
    if n_cells == 0 {
        return Err(Error::invalid("n_cells must be at least 1"));
    }
    FiniteStack::new(spec, n_cells, resolution)?.modes(n_modes, None)
}
