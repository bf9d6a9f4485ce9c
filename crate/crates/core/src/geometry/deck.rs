use std::f64::consts::FRAC_PI_2;

use super::builder::{graded_lines, MeshBuilder};
use super::{
    Axis, CellSpec, Geometry, LinkElement, Region, Resolution, SupportLocation, SupportSpec, TaggedMesh, DISK_SEGMENTS,
    PERIODIC_TOL,
};
use crate::error::{Error, Result};

/// Meshes a deck cell `[0, d] x [-s/2, s/2]`, plus disks and links when present.
pub fn build_deck_cell(spec: &CellSpec, resolution: Resolution) -> Result<TaggedMesh> {
    spec.validate()?;
    resolution.validate()?;
    let (s, support, resonators) = match &spec.geometry {
        Geometry::DeckPlain { deck_thickness, support } => (*deck_thickness, *support, None),
        Geometry::DeckWithResonators { deck_thickness, support, resonators } => {
            (*deck_thickness, *support, Some(resonators))
        }
        _ => return Err(Error::invalid("not a deck geometry")),
    };
    let d = spec.period;
    let half = 0.5 * s;
    let w = support.width;

    let mut xb = vec![0.0, d];
    let mut yb = vec![-half, 0.0, half];
    match support.location {
        SupportLocation::Underside if w > 0.0 => xb.extend([0.5 * w, d - 0.5 * w]),
        SupportLocation::Midline if w > 0.0 => yb.extend([-0.5 * w, 0.5 * w]),
        _ => {}
    }
    if let Some(r) = resonators {
        xb.extend(r.diagonal_links(d, s).iter().map(|l| l.deck[0]));
    }
    let xs = graded_lines(&xb, |lo, hi| resolution.divisions(hi - lo, 0.5 * s));
    let ys = graded_lines(&yb, |lo, hi| resolution.divisions(hi - lo, 0.25 * s));

    let mut b = MeshBuilder::new(d);
    b.grid(&xs, &ys, |_| Some(Region::Deck));

    if let Some(r) = resonators {
        let centers = r.disk_centers(d);
        let rings = ((4.0 * resolution.0).ceil() as usize).max(4);
        let segments = ((DISK_SEGMENTS as f64 * resolution.0).round() as usize).max(16);
        for (i, c) in centers.iter().enumerate() {
            // Rim attachment angles: two diagonals above, the horizontal link on the inner side.
            let beta = r.link_angle;
            let inner = if i == 0 { 0.0 } else { std::f64::consts::PI };
            let snaps = [FRAC_PI_2 + beta, FRAC_PI_2 - beta, inner];
            b.disk(*c, r.disk_radii[i], rings, segments, &snaps, Region::Disk(i));
        }
    }

    let tol = PERIODIC_TOL * d;
    let dirichlet = support_edge_predicate(support, d, half, tol);
    let mut mesh = b.finish(d, Axis::Horizontal, spec.materials.clone(), dirichlet)?;

    if support.width == 0.0 {
        let y = match support.location {
            SupportLocation::Midline => 0.0,
            SupportLocation::Underside => -half,
        };
        mesh.pinned_nodes = vec![nearest_node(&mesh, [0.0, y], tol)?, nearest_node(&mesh, [d, y], tol)?];
    }

    if let Some(r) = resonators {
        let snap = 1e-9 * d;
        for link in r.diagonal_links(d, s) {
            let a = nearest_node(&mesh, link.deck, snap)?;
            let c = nearest_node(&mesh, link.rim, snap)?;
            mesh.link_elements.push(LinkElement {
                nodes: [a, c],
                stiffness: r.diagonal_stiffness,
                density: r.link_density,
                width: r.link_width,
            });
        }
        let (p, q) = r.horizontal_link(d);
        mesh.link_elements.push(LinkElement {
            nodes: [nearest_node(&mesh, p, snap)?, nearest_node(&mesh, q, snap)?],
            stiffness: r.horizontal_stiffness,
            density: r.link_density,
            width: r.link_width,
        });
    }
    mesh.validate()?;
    Ok(mesh)
}

fn support_edge_predicate(support: SupportSpec, d: f64, half: f64, tol: f64) -> impl Fn([f64; 2], [f64; 2]) -> bool {
    move |a: [f64; 2], b: [f64; 2]| {
        let w = support.width;
        if w == 0.0 {
            return false;
        }
        match support.location {
            SupportLocation::Underside => {
                let on_bottom = (a[1] + half).abs() < tol && (b[1] + half).abs() < tol;
                let xm = 0.5 * (a[0] + b[0]);
                on_bottom && (xm < 0.5 * w || xm > d - 0.5 * w)
            }
            SupportLocation::Midline => {
                let on_end =
                    (a[0].abs() < tol && b[0].abs() < tol) || ((a[0] - d).abs() < tol && (b[0] - d).abs() < tol);
                on_end && (0.5 * (a[1] + b[1])).abs() < 0.5 * w
            }
        }
    }
}

/// Index of the node at `p`, failing when none lies within `tol`.
pub(crate) fn nearest_node(mesh: &TaggedMesh, p: [f64; 2], tol: f64) -> Result<usize> {
    let (best, dist) = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, q)| (i, (q[0] - p[0]).hypot(q[1] - p[1])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Meshing("empty mesh".into()))?;
    if dist > tol {
        return Err(Error::Meshing(format!(
            "no mesh node at ({:.6}, {:.6}); nearest is {dist:.3e} m away",
            p[0], p[1]
        )));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag;

    #[test]
    fn plain_deck_has_two_periodic_faces() {
        let mesh = build_deck_cell(&CellSpec::bridge_deck(false), Resolution::default()).unwrap();
        let masters: Vec<_> = mesh.edges_tagged(BoundaryTag::PeriodicMaster).collect();
        let slaves: Vec<_> = mesh.edges_tagged(BoundaryTag::PeriodicSlave).collect();
        assert_eq!(masters.len(), slaves.len());
        assert!(!masters.is_empty());
        assert!(masters.iter().all(|e| e.nodes.iter().all(|&n| mesh.nodes[n][0] == 0.0)));
        assert!(slaves.iter().all(|e| e.nodes.iter().all(|&n| mesh.nodes[n][0] == 4.0)));
        assert!((mesh.area() - 0.8).abs() < 1e-12);
        assert_eq!(mesh.pinned_nodes.len(), 2);
        assert!(mesh.link_elements.is_empty());
    }

    #[test]
    fn resonator_deck_masses_and_links() {
        let mesh = build_deck_cell(&CellSpec::bridge_deck(true), Resolution::default()).unwrap();
        let disks = mesh.region_mass(|r| matches!(r, Region::Disk(_))).unwrap();
        let exact = 7850.0 * std::f64::consts::PI * (0.1f64.powi(2) + 0.075f64.powi(2));
        assert!((disks - exact).abs() < 0.02 * exact, "{disks} vs {exact}");
        assert_eq!(mesh.link_elements.len(), 5);
        let horizontal = mesh.link_elements[4];
        let [p, q] = [mesh.nodes[horizontal.nodes[0]], mesh.nodes[horizontal.nodes[1]]];
        assert!((p[1] - q[1]).abs() < 1e-12);
        assert_eq!(mesh.regions().len(), 3);
    }

    #[test]
    fn underside_patch_is_dirichlet() {
        let mut spec = CellSpec::bridge_deck(false);
        if let Geometry::DeckPlain { support, .. } = &mut spec.geometry {
            *support = SupportSpec { location: SupportLocation::Underside, width: 0.2 };
        }
        let mesh = build_deck_cell(&spec, Resolution::default()).unwrap();
        let fixed = mesh.dirichlet_nodes();
        assert!(!fixed.is_empty());
        assert!(fixed.iter().all(|&n| (mesh.nodes[n][1] + 0.1).abs() < 1e-12));
        assert!(mesh.pinned_nodes.is_empty());
    }

    #[test]
    fn resolution_refines() {
        let coarse = build_deck_cell(&CellSpec::bridge_deck(false), Resolution(1.0)).unwrap();
        let fine = build_deck_cell(&CellSpec::bridge_deck(false), Resolution(2.0)).unwrap();
        assert!(fine.elements.len() >= 3 * coarse.elements.len());
    }
}
