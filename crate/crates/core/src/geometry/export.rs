//! Debug exports: a plain node/element listing and a JSON geometry report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{BoundaryTag, CellSpec, Geometry, SupportLocation, TaggedMesh, DEFAULT_DECK_POISSON};
use crate::error::Result;

/// Writes the mesh as whitespace-separated sections:
/// `nodes`, `elements` (six node ids and a region), `edges`, `links`, `pinned`.
pub fn mesh_to_text(mesh: &TaggedMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "nodes {}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(out, "{i} {:.17e} {:.17e}", p[0], p[1]);
    }
    let _ = writeln!(out, "elements {}", mesh.elements.len());
    for (i, e) in mesh.elements.iter().enumerate() {
        let n = e.nodes;
        let _ = writeln!(out, "{i} {} {} {} {} {} {} {}", n[0], n[1], n[2], n[3], n[4], n[5], e.region);
    }
    let _ = writeln!(out, "edges {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(out, "{} {} {} {:?}", e.nodes[0], e.nodes[1], e.nodes[2], e.tag);
    }
    let _ = writeln!(out, "links {}", mesh.link_elements.len());
    for l in &mesh.link_elements {
        let _ = writeln!(out, "{} {} {:.17e} {:.17e} {:.17e}", l.nodes[0], l.nodes[1], l.stiffness, l.density, l.width);
    }
    let _ = writeln!(out, "pinned {}", mesh.pinned_nodes.len());
    for p in &mesh.pinned_nodes {
        let _ = writeln!(out, "{p}");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkReport {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub length: f64,
    pub stiffness: f64,
    pub mass: f64,
}

/// Summary of a meshed cell, including every choice the geometry leaves open.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub schema_version: u32,
    pub kind: String,
    pub period: f64,
    pub cells: usize,
    pub nodes: usize,
    pub elements: usize,
    pub dofs: usize,
    pub edge_counts: BTreeMap<String, usize>,
    pub region_masses: BTreeMap<String, f64>,
    pub total_mass: f64,
    pub links: Vec<LinkReport>,
    pub pinned_nodes: Vec<[f64; 2]>,
    pub support: Option<String>,
    pub deck_poisson_default: f64,
}

impl GeometryReport {
    pub fn new(spec: &CellSpec, mesh: &TaggedMesh) -> Result<Self> {
        let kind = serde_json::to_value(&spec.geometry)
            .ok()
            .and_then(|v| v.get("kind").and_then(|k| k.as_str()).map(str::to_string))
            .unwrap_or_default();
        let mut edge_counts = BTreeMap::new();
        for tag in
            [BoundaryTag::Dirichlet, BoundaryTag::TractionFree, BoundaryTag::PeriodicMaster, BoundaryTag::PeriodicSlave]
        {
            edge_counts.insert(format!("{tag:?}"), mesh.edges_tagged(tag).count());
        }
        let mut region_masses = BTreeMap::new();
        for region in mesh.regions() {
            region_masses.insert(region.to_string(), mesh.region_mass(|r| r == region)?);
        }
        let links = mesh
            .link_elements
            .iter()
            .map(|l| {
                let length = mesh.link_length(l);
                LinkReport {
                    from: mesh.nodes[l.nodes[0]],
                    to: mesh.nodes[l.nodes[1]],
                    length,
                    stiffness: l.stiffness,
                    mass: l.density * l.width * length,
                }
            })
            .collect();
        let support = match &spec.geometry {
            Geometry::DeckPlain { support, .. } | Geometry::DeckWithResonators { support, .. } => {
                let at = match support.location {
                    SupportLocation::Midline => "midline of the cell ends",
                    SupportLocation::Underside => "underside at the cell ends",
                };
                Some(if support.width == 0.0 {
                    format!("pinned node at the {at}")
                } else {
                    format!("clamped patch of width {} m at the {at}", support.width)
                })
            }
            _ => None,
        };
        Ok(GeometryReport {
            schema_version: spec.schema_version,
            kind,
            period: spec.period,
            cells: mesh.cells,
            nodes: mesh.node_count(),
            elements: mesh.elements.len(),
            dofs: mesh.dof_count(),
            edge_counts,
            region_masses,
            total_mass: mesh.total_mass()?,
            links,
            pinned_nodes: mesh.pinned_nodes.iter().map(|&n| mesh.nodes[n]).collect(),
            support,
            deck_poisson_default: DEFAULT_DECK_POISSON,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
