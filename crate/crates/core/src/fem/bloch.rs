use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::assemble::GlobalMatrices;
use crate::error::{Error, Result};
use crate::geometry::TaggedMesh;
use crate::sparse::CsrMatrix;

/// Relative Frobenius Hermiticity defect tolerated before symmetrization.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Where each full-mesh DOF lives in the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    /// `None` for fixed DOFs, else the reduced index and the phase factor.
    pub entries: Vec<Option<(usize, Complex64)>>,
    pub reduced_len: usize,
}

impl DofMap {
    /// Full-mesh displacement vector from a reduced one.
    pub fn expand(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .iter()
            .map(|e| match e {
                Some((i, phase)) => phase * x[*i],
                None => Complex64::new(0.0, 0.0),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BlochSystem {
    /// Wavenumber [rad/m].
    pub k: f64,
    pub stiffness: CsrMatrix<Complex64>,
    pub mass: CsrMatrix<Complex64>,
    pub dof_map: DofMap,
}

impl BlochSystem {
    pub fn dim(&self) -> usize {
        self.dof_map.reduced_len
    }
}

/// Builds the DOF map: fixed nodes removed, slave DOFs folded into masters with `e^{ikd}`.
pub fn dof_map(mesh: &TaggedMesh, k: f64) -> DofMap {
    let n = mesh.node_count();
    let mut fixed: BTreeSet<usize> = mesh.dirichlet_nodes().into_iter().collect();
    // A pair is fixed entirely if either side is.
    for &(m, s) in &mesh.periodic_pairs {
        if fixed.contains(&m) || fixed.contains(&s) {
            fixed.insert(m);
            fixed.insert(s);
        }
    }
    let mut master_of = vec![usize::MAX; n];
    for &(m, s) in &mesh.periodic_pairs {
        master_of[s] = m;
    }
    let phase = Complex64::from_polar(1.0, k * mesh.period);
    let one = Complex64::new(1.0, 0.0);
    let mut entries = vec![None; 2 * n];
    let mut next = 0;
    for node in 0..n {
        if fixed.contains(&node) || master_of[node] != usize::MAX {
            continue;
        }
        for c in 0..2 {
            entries[2 * node + c] = Some((next, one));
            next += 1;
        }
    }
    for node in 0..n {
        let m = master_of[node];
        if m == usize::MAX || fixed.contains(&node) {
            continue;
        }
        for c in 0..2 {
            entries[2 * node + c] = entries[2 * m + c].map(|(i, _)| (i, phase));
        }
    }
    DofMap { entries, reduced_len: next }
}

/// Applies Dirichlet and Bloch-Floquet conditions: `K_r = T^H K T`, `M_r = T^H M T`.
pub fn apply_constraints(global: &GlobalMatrices, mesh: &TaggedMesh, k: f64) -> Result<BlochSystem> {
    if !k.is_finite() || k.abs() * mesh.period > 2.0 * PI * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "wavenumber {k} rad/m is outside [-2 pi/d, 2 pi/d] for d = {}",
            mesh.period
        )));
    }
    let map = dof_map(mesh, k);
    if map.reduced_len == 0 {
        return Err(Error::invalid("every degree of freedom is fixed"));
    }
    let stiffness = reduce(&global.stiffness, &map, "stiffness")?;
    let mass = reduce(&global.mass, &map, "mass")?;
    Ok(BlochSystem { k, stiffness, mass, dof_map: map })
}

fn reduce(a: &CsrMatrix<f64>, map: &DofMap, what: &str) -> Result<CsrMatrix<Complex64>> {
    let mut t = Vec::with_capacity(a.nnz());
    for (r, c, v) in a.iter() {
        if let (Some((i, pi)), Some((j, pj))) = (map.entries[r], map.entries[c]) {
            t.push((i, j, pi.conj() * pj * v));
        }
    }
    let mut out = CsrMatrix::from_triplets(map.reduced_len, map.reduced_len, t);
    // Round phases that are +-1 up to rounding so real cases stay exactly real.
    out = out.map(|v| {
        let tiny = 1e-15 * v.norm();
        Complex64::new(if v.re.abs() <= tiny { 0.0 } else { v.re }, if v.im.abs() <= tiny { 0.0 } else { v.im })
    });
    let norm = out.frobenius_norm();
    let defect = out.hermitian_defect();
    if defect > HERMITIAN_TOL * norm {
        return Err(Error::Integrity(format!(
            "reduced {what} matrix is not Hermitian (relative defect {:.3e})",
            defect / norm
        )));
    }
    out.symmetrize();
    Ok(out)
}
