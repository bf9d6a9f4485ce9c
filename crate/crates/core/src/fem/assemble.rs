use super::element::{scalar_mass, stiffness, TriangleGeometry};
use crate::error::{Error, Result};
use crate::geometry::{LinkElement, TaggedMesh};
use crate::sparse::CsrMatrix;

/// Unconstrained stiffness and mass of a mesh, two DOFs per node
/// (`2 * node` for x, `2 * node + 1` for y).
#[derive(Debug, Clone)]
pub struct GlobalMatrices {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
}

/// Assembles plane-strain stiffness and consistent mass, bar links and lumped masses.
///
/// Traction-free edges need no term. Each link contributes its spring
/// constant times the axial projector and half its mass to each end.
pub fn assemble(mesh: &TaggedMesh) -> Result<GlobalMatrices> {
    let n = mesh.dof_count();
    let mut kt: Vec<(usize, usize, f64)> =
        Vec::with_capacity(mesh.elements.len() * 144 + mesh.link_elements.len() * 16);
    let mut mt: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.elements.len() * 72 + mesh.link_elements.len() * 4);

    for (ei, e) in mesh.elements.iter().enumerate() {
        let corners = [mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]], mesh.nodes[e.nodes[2]]];
        let geom = TriangleGeometry::new(corners, ei)?;
        let material =
            mesh.material(e.region).map_err(|err| Error::Assembly { element: ei, reason: err.to_string() })?;
        let ke = stiffness(&geom, material);
        let me = scalar_mass(&geom, material.rho());
        let dofs: [usize; 12] = std::array::from_fn(|i| 2 * e.nodes[i / 2] + i % 2);
        for r in 0..12 {
            for c in 0..12 {
                kt.push((dofs[r], dofs[c], ke[r][c]));
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                for comp in 0..2 {
                    mt.push((2 * e.nodes[i] + comp, 2 * e.nodes[j] + comp, me[i][j]));
                }
            }
        }
    }

    for link in &mesh.link_elements {
        add_link(mesh, link, &mut kt, &mut mt)?;
    }
    for p in &mesh.point_masses {
        if !(p.mass >= 0.0) || p.node >= mesh.node_count() {
            return Err(Error::invalid(format!("invalid point mass at node {}", p.node)));
        }
        mt.push((2 * p.node, 2 * p.node, p.mass));
        mt.push((2 * p.node + 1, 2 * p.node + 1, p.mass));
    }

    Ok(GlobalMatrices { stiffness: CsrMatrix::from_triplets(n, n, kt), mass: CsrMatrix::from_triplets(n, n, mt) })
}

/// 4x4 link stiffness `gamma * [ee^T, -ee^T; -ee^T, ee^T]` in DOF order `(ax, ay, bx, by)`.
pub fn link_stiffness(a: [f64; 2], b: [f64; 2], gamma: f64) -> [[f64; 4]; 4] {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let e = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let mut out = [[0.0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let sign = if (r < 2) == (c < 2) { 1.0 } else { -1.0 };
            out[r][c] = sign * gamma * e[r % 2] * e[c % 2];
        }
    }
    out
}

fn add_link(
    mesh: &TaggedMesh,
    link: &LinkElement,
    kt: &mut Vec<(usize, usize, f64)>,
    mt: &mut Vec<(usize, usize, f64)>,
) -> Result<()> {
    let len = mesh.link_length(link);
    if !(len > 0.0) || !(link.stiffness >= 0.0) || !(link.density >= 0.0) {
        return Err(Error::invalid(format!("degenerate link between nodes {:?}", link.nodes)));
    }
    let [a, b] = link.nodes;
    let kl = link_stiffness(mesh.nodes[a], mesh.nodes[b], link.stiffness);
    let dofs = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1];
    for r in 0..4 {
        for c in 0..4 {
            kt.push((dofs[r], dofs[c], kl[r][c]));
        }
    }
    let half = 0.5 * link.density * link.width * len;
    for &d in &dofs {
        mt.push((d, d, half));
    }
    Ok(())
}
