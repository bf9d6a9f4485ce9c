use num_complex::Complex64;

use super::assemble::GlobalMatrices;
use super::element::{TriangleGeometry, STIFFNESS_RULE};
use crate::error::{Error, Result};
use crate::geometry::TaggedMesh;

/// `u^H K u` summed element by element from strains and link elongations.
///
/// Equal to the assembled quadratic form in exact arithmetic, but for
/// near-rigid `u` the rounding error is quadratic in the strain rather than
/// proportional to `||K||`, so tiny eigenvalues keep their relative accuracy.
pub fn strain_energy(mesh: &TaggedMesh, u: &[Complex64]) -> Result<f64> {
    if u.len() != mesh.dof_count() {
        return Err(Error::invalid("displacement does not belong to this mesh"));
    }
    let mut total = 0.0;
    for (ei, e) in mesh.elements.iter().enumerate() {
        let corners = [mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]], mesh.nodes[e.nodes[2]]];
        let geom = TriangleGeometry::new(corners, ei)?;
        let d = mesh.material(e.region)?.plane_strain_matrix();
        for (l, w) in STIFFNESS_RULE {
            let g = geom.shape_gradients(l);
            let mut eps = [Complex64::new(0.0, 0.0); 3];
            for (i, &n) in e.nodes.iter().enumerate() {
                let (ux, uy) = (u[2 * n], u[2 * n + 1]);
                eps[0] += ux * g[i][0];
                eps[1] += uy * g[i][1];
                eps[2] += ux * g[i][1] + uy * g[i][0];
            }
            let mut form = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    form += d[r][c] * (eps[r].conj() * eps[c]).re;
                }
            }
            total += w * geom.area * form;
        }
    }
    for link in &mesh.link_elements {
        let [a, b] = link.nodes;
        let len = mesh.link_length(link);
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let e = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
        let stretch = (u[2 * b] - u[2 * a]) * e[0] + (u[2 * b + 1] - u[2 * a + 1]) * e[1];
        total += link.stiffness * stretch.norm_sqr();
    }
    Ok(total)
}

/// Rayleigh-quotient frequency [Hz] of a full-mesh displacement field.
pub fn rayleigh_frequency(mesh: &TaggedMesh, global: &GlobalMatrices, u: &[Complex64]) -> Result<f64> {
    let mu = global.mass.mul_vec(u).iter().zip(u).map(|(m, x)| (x.conj() * m).re).sum::<f64>();
    if !(mu > 0.0) {
        return Err(Error::invalid("displacement has no kinetic energy"));
    }
    Ok((strain_energy(mesh, u)? / mu).max(0.0).sqrt() / (2.0 * std::f64::consts::PI))
}
