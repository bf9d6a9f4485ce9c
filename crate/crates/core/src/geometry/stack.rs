use super::{BoundaryEdge, BoundaryTag, Element, LinkElement, PointMass, TaggedMesh};
use crate::error::{Error, Result};

/// Chains `n_cells` copies of a periodic cell along its axis.
///
/// Interfaces between copies are merged. The first copy's master face is
/// clamped and the last copy's slave face is left traction-free, as for a
/// building standing on rigid ground.
pub fn replicate_stack(mesh: &TaggedMesh, n_cells: usize) -> Result<TaggedMesh> {
    if n_cells == 0 {
        return Err(Error::invalid("a stack needs at least one cell"));
    }
    if mesh.periodic_pairs.is_empty() {
        return Err(Error::invalid("the cell has no periodic faces to chain"));
    }
    let n = mesh.nodes.len();
    let ax = mesh.axis.index();
    let mut master_of = vec![None; n];
    for &(m, s) in &mesh.periodic_pairs {
        master_of[m] = Some(s);
    }

    let mut nodes = Vec::with_capacity(n * n_cells);
    // maps[c][i]: index of node i of copy c in the stack.
    let mut maps: Vec<Vec<usize>> = Vec::with_capacity(n_cells);
    for c in 0..n_cells {
        let mut map = vec![usize::MAX; n];
        for i in 0..n {
            map[i] = match (c, master_of[i]) {
                (c, Some(s)) if c > 0 => maps[c - 1][s],
                _ => {
                    let mut p = mesh.nodes[i];
                    p[ax] += c as f64 * mesh.period;
                    nodes.push(p);
                    nodes.len() - 1
                }
            };
        }
        maps.push(map);
    }

    let mut out = TaggedMesh {
        nodes,
        elements: Vec::with_capacity(mesh.elements.len() * n_cells),
        boundary_edges: Vec::new(),
        link_elements: Vec::new(),
        point_masses: Vec::new(),
        pinned_nodes: Vec::new(),
        periodic_pairs: Vec::new(),
        materials: mesh.materials.clone(),
        period: mesh.period * n_cells as f64,
        axis: mesh.axis,
        cells: n_cells * mesh.cells,
    };
    for (c, map) in maps.iter().enumerate() {
        out.elements.extend(mesh.elements.iter().map(|e| Element { nodes: e.nodes.map(|v| map[v]), region: e.region }));
        for e in &mesh.boundary_edges {
            let tag = match e.tag {
                BoundaryTag::PeriodicMaster if c == 0 => BoundaryTag::Dirichlet,
                BoundaryTag::PeriodicSlave if c + 1 == n_cells => BoundaryTag::TractionFree,
                BoundaryTag::PeriodicMaster | BoundaryTag::PeriodicSlave => continue,
                t => t,
            };
            out.boundary_edges.push(BoundaryEdge { nodes: e.nodes.map(|v| map[v]), tag });
        }
        out.link_elements
            .extend(mesh.link_elements.iter().map(|l| LinkElement { nodes: l.nodes.map(|v| map[v]), ..*l }));
        out.point_masses.extend(mesh.point_masses.iter().map(|p| PointMass { node: map[p.node], mass: p.mass }));
        out.pinned_nodes.extend(mesh.pinned_nodes.iter().map(|&v| map[v]));
    }
    out.pinned_nodes.sort_unstable();
    out.pinned_nodes.dedup();

    let expected = n_cells * n - (n_cells - 1) * mesh.periodic_pairs.len();
    if out.nodes.len() != expected {
        return Err(Error::Integrity(format!("stack has {} nodes, expected {expected}", out.nodes.len())));
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_frame_cell, CellSpec, Resolution};

    #[test]
    fn node_count_and_boundaries() {
        let cell = build_frame_cell(&CellSpec::skyscraper_storey(true), Resolution::default()).unwrap();
        let n = cell.node_count();
        let iface = cell.periodic_pairs.len();
        for cells in [1, 2, 5] {
            let stack = replicate_stack(&cell, cells).unwrap();
            assert_eq!(stack.node_count(), cells * n - (cells - 1) * iface);
            assert_eq!(stack.cells, cells);
            assert!(stack.periodic_pairs.is_empty());
            let fixed = stack.dirichlet_nodes();
            assert_eq!(fixed.len(), iface);
            assert!(fixed.iter().all(|&v| stack.nodes[v][1] == 0.0));
            assert!((stack.area() - cells as f64 * cell.area()).abs() < 1e-9);
        }
        assert!(replicate_stack(&cell, 0).is_err());
    }
}
