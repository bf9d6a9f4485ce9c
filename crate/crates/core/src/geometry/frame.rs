use super::builder::{graded_lines, MeshBuilder};
use super::{Axis, CellSpec, Geometry, Region, Resolution, TaggedMesh};
use crate::error::{Error, Result};

/// Meshes one storey: a square frame with walls of thickness `s` on all four
/// sides of `[0, d]^2`, periodic in the vertical direction. The optional
/// resonator block hangs from the underside of the top wall on vertical
/// ligaments.
pub fn build_frame_cell(spec: &CellSpec, resolution: Resolution) -> Result<TaggedMesh> {
    spec.validate()?;
    resolution.validate()?;
    let (s, resonator) = match &spec.geometry {
        Geometry::FrameCell { wall_thickness } => (*wall_thickness, None),
        Geometry::FrameCellWithResonator { wall_thickness, resonator } => (*wall_thickness, Some(resonator)),
        _ => return Err(Error::invalid("not a frame geometry")),
    };
    let d = spec.period;
    let coarse = 0.25 * s;

    let mut xb = vec![0.0, s, d - s, d];
    let mut yb = xb.clone();
    let mut lig_x: Vec<(f64, f64)> = Vec::new();
    let mut lig_y = (0.0, 0.0);
    let mut block = ([0.0; 2], [0.0; 2]);
    let mut fine_x = f64::INFINITY;
    let mut fine_y = f64::INFINITY;
    // Bands around the ligament ends, where the re-entrant corners concentrate stress.
    let mut corner_bands: Vec<(f64, f64)> = Vec::new();
    let mut flank_bands: Vec<(f64, f64)> = Vec::new();
    if let Some(r) = resonator {
        let ceiling = d - s;
        let lig_bottom = ceiling - r.ligament_length;
        let block_bottom = lig_bottom - r.block_height;
        let hw = 0.5 * r.ligament_width;
        lig_x = r.ligament_centers(d).iter().map(|&c| (c - hw, c + hw)).collect();
        lig_y = (lig_bottom, ceiling);
        block = ([0.5 * (d - r.block_width), 0.5 * (d + r.block_width)], [block_bottom, lig_bottom]);
        for &(a, b) in &lig_x {
            xb.extend([a - r.ligament_width, a, b, b + r.ligament_width]);
            flank_bands.extend([(a - r.ligament_width, a), (b, b + r.ligament_width)]);
        }
        xb.extend(block.0);
        yb.extend([block_bottom, lig_bottom]);
        let w = r.ligament_width;
        for end in [lig_bottom, ceiling] {
            corner_bands.push((end - w, end + w));
            yb.extend([end - w, end + w]);
        }
        fine_x = 0.5 * w;
        fine_y = w;
    }

    let inside = |v: f64, (a, b): (f64, f64)| v > a && v < b;
    let xs = graded_lines(&xb, |lo, hi| {
        let mid = 0.5 * (lo + hi);
        let target = if lig_x.iter().chain(&flank_bands).any(|&iv| inside(mid, iv)) { fine_x } else { coarse };
        resolution.divisions(hi - lo, target)
    });
    let ys = graded_lines(&yb, |lo, hi| {
        let mid = 0.5 * (lo + hi);
        let target = if corner_bands.iter().any(|&iv| inside(mid, iv)) {
            0.25 * fine_y
        } else if inside(mid, lig_y) {
            fine_y
        } else {
            coarse
        };
        resolution.divisions(hi - lo, target)
    });

    let mut b = MeshBuilder::new(d);
    b.grid(&xs, &ys, |[x, y]| {
        if x < s || x > d - s || y < s || y > d - s {
            Some(Region::Frame)
        } else if resonator.is_none() {
            None
        } else if inside(y, lig_y) {
            lig_x.iter().position(|&iv| inside(x, iv)).map(Region::Ligament)
        } else if inside(x, (block.0[0], block.0[1])) && inside(y, (block.1[0], block.1[1])) {
            Some(Region::Block)
        } else {
            None
        }
    });
    let mesh = b.finish(d, Axis::Vertical, spec.materials.clone(), |_, _| false)?;
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryTag, FrameResonator};

    #[test]
    fn frame_area_and_faces() {
        let mesh = build_frame_cell(&CellSpec::skyscraper_storey(false), Resolution::default()).unwrap();
        assert!((mesh.area() - 0.36).abs() < 1e-12);
        assert!(mesh
            .edges_tagged(BoundaryTag::PeriodicMaster)
            .all(|e| e.nodes.iter().all(|&n| mesh.nodes[n][1] == 0.0)));
        assert_eq!(
            mesh.edges_tagged(BoundaryTag::PeriodicMaster).count(),
            mesh.edges_tagged(BoundaryTag::PeriodicSlave).count()
        );
        assert!(mesh.dirichlet_nodes().is_empty());
    }

    #[test]
    fn resonator_has_three_ligaments() {
        let mesh = build_frame_cell(&CellSpec::skyscraper_storey(true), Resolution::default()).unwrap();
        let ligaments: Vec<_> = mesh.regions().into_iter().filter(|r| matches!(r, Region::Ligament(_))).collect();
        assert_eq!(ligaments.len(), 3);
        let block = mesh.region_area(|r| r == Region::Block);
        assert!((block - 0.3 * 0.14).abs() < 1e-12);
        let lig = mesh.region_area(|r| matches!(r, Region::Ligament(_)));
        assert!((lig - 3.0 * 0.01 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_ligament_is_centred() {
        let mut spec = CellSpec::skyscraper_storey(true);
        if let Geometry::FrameCellWithResonator { resonator, .. } = &mut spec.geometry {
            *resonator = FrameResonator { ligament_count: 1, ..FrameResonator::skyscraper_example() };
        }
        let mesh = build_frame_cell(&spec, Resolution::default()).unwrap();
        let nodes = mesh.region_nodes(|r| r == Region::Ligament(0));
        let xmin = nodes.iter().map(|&n| mesh.nodes[n][0]).fold(f64::INFINITY, f64::min);
        assert!((xmin - 0.495).abs() < 1e-12);
    }
}
