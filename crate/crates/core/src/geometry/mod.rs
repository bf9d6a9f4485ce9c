//! Elementary-cell geometry and tagged quadratic-triangle meshes.

mod builder;
mod deck;
pub mod export;
mod frame;
mod spec;
mod stack;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::Material;

pub use deck::build_deck_cell;
pub use frame::build_frame_cell;
pub use spec::{
    CellSpec, DeckResonators, DiagonalLink, FrameResonator, Geometry, SupportLocation, SupportSpec,
    DEFAULT_DECK_POISSON, DEFAULT_LIGAMENT_PITCH, DEFAULT_LINK_WIDTH, SCHEMA_VERSION,
};
pub use stack::replicate_stack;

/// Relative tolerance for periodic node matching.
pub const PERIODIC_TOL: f64 = 1e-9;

/// Number of straight segments approximating each disk boundary at unit resolution.
pub const DISK_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::Horizontal => 0,
            Axis::Vertical => 1,
        }
    }

    pub fn unit(self) -> [f64; 2] {
        match self {
            Axis::Horizontal => [1.0, 0.0],
            Axis::Vertical => [0.0, 1.0],
        }
    }
}

/// Mesh density control. `1.0` is the default mesh; `2.0` halves every target edge length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution(pub f64);

impl Default for Resolution {
    fn default() -> Self {
        Resolution(1.0)
    }
}

impl Resolution {
    pub fn validate(self) -> Result<()> {
        if self.0 >= 0.25 && self.0 <= 16.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("resolution must lie in [0.25, 16], got {}", self.0)))
        }
    }

    pub(crate) fn divisions(self, length: f64, target: f64) -> usize {
        ((length / (target / self.0)) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Deck,
    Disk(usize),
    Frame,
    Block,
    Ligament(usize),
}

impl Region {
    /// Key into the material table.
    pub fn material_key(self) -> &'static str {
        match self {
            Region::Deck => "deck",
            Region::Disk(_) => "disk",
            Region::Frame => "frame",
            Region::Block | Region::Ligament(_) => "resonator",
        }
    }

    /// True for regions that belong to an attached resonator rather than the host.
    pub fn is_resonator(self) -> bool {
        matches!(self, Region::Disk(_) | Region::Block | Region::Ligament(_))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Deck => write!(f, "deck"),
            Region::Disk(i) => write!(f, "disk{}", i + 1),
            Region::Frame => write!(f, "frame"),
            Region::Block => write!(f, "block"),
            Region::Ligament(i) => write!(f, "ligament{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Dirichlet,
    TractionFree,
    PeriodicMaster,
    PeriodicSlave,
}

/// Straight-sided 6-node triangle: corners 0..3 counter-clockwise, then midside
/// nodes on edges (0,1), (1,2), (2,0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub nodes: [usize; 6],
    pub region: Region,
}

/// Quadratic boundary edge: two end nodes and the midside node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 3],
    pub tag: BoundaryTag,
}

/// Axial spring between two nodes. Its mass `density * length * width` is
/// lumped half to each end during assembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkElement {
    pub nodes: [usize; 2],
    /// Spring constant per unit depth [Pa].
    pub stiffness: f64,
    pub density: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointMass {
    pub node: usize,
    /// Mass per unit depth [kg/m].
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct TaggedMesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Element>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub link_elements: Vec<LinkElement>,
    pub point_masses: Vec<PointMass>,
    /// Nodes fixed in both directions in addition to those on Dirichlet edges.
    pub pinned_nodes: Vec<usize>,
    /// `(master, slave)` node pairs with `slave = master + period * axis`.
    pub periodic_pairs: Vec<(usize, usize)>,
    pub materials: BTreeMap<String, Material>,
    pub period: f64,
    pub axis: Axis,
    /// Number of elementary cells chained in this mesh.
    pub cells: usize,
}

impl TaggedMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dof_count(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn material(&self, region: Region) -> Result<&Material> {
        self.materials
            .get(region.material_key())
            .ok_or_else(|| Error::invalid(format!("region {region} has no material")))
    }

    pub fn element_area(&self, e: &Element) -> f64 {
        let [a, b, c] = [self.nodes[e.nodes[0]], self.nodes[e.nodes[1]], self.nodes[e.nodes[2]]];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        self.elements.iter().map(|e| self.element_area(e)).sum()
    }

    pub fn region_area(&self, pred: impl Fn(Region) -> bool) -> f64 {
        self.elements.iter().filter(|e| pred(e.region)).map(|e| self.element_area(e)).sum()
    }

    /// Mass per unit depth of the continuum regions selected by `pred`.
    pub fn region_mass(&self, pred: impl Fn(Region) -> bool) -> Result<f64> {
        let mut total = 0.0;
        for e in self.elements.iter().filter(|e| pred(e.region)) {
            total += self.material(e.region)?.rho() * self.element_area(e);
        }
        Ok(total)
    }

    pub fn link_length(&self, link: &LinkElement) -> f64 {
        let [a, b] = [self.nodes[link.nodes[0]], self.nodes[link.nodes[1]]];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    /// Total mass per unit depth: continuum, links and point masses.
    pub fn total_mass(&self) -> Result<f64> {
        let continuum = self.region_mass(|_| true)?;
        let links: f64 = self.link_elements.iter().map(|l| l.density * l.width * self.link_length(l)).sum();
        let points: f64 = self.point_masses.iter().map(|p| p.mass).sum();
        Ok(continuum + links + points)
    }

    /// Distinct regions present in the mesh.
    pub fn regions(&self) -> BTreeSet<Region> {
        self.elements.iter().map(|e| e.region).collect()
    }

    pub fn edges_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Nodes fixed by Dirichlet edges or pins, sorted.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let mut set: BTreeSet<usize> = self.pinned_nodes.iter().copied().collect();
        for e in self.edges_tagged(BoundaryTag::Dirichlet) {
            set.extend(e.nodes);
        }
        set.into_iter().collect()
    }

    /// Nodes on periodic master edges.
    pub fn interface_nodes(&self) -> BTreeSet<usize> {
        self.periodic_pairs.iter().map(|&(m, _)| m).collect()
    }

    /// Nodes of the elements whose region satisfies `pred`.
    pub fn region_nodes(&self, pred: impl Fn(Region) -> bool) -> BTreeSet<usize> {
        self.elements.iter().filter(|e| pred(e.region)).flat_map(|e| e.nodes).collect()
    }

    /// Checks the structural invariants of a mesh.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (i, e) in self.elements.iter().enumerate() {
            if e.nodes.iter().any(|&v| v >= n) {
                return Err(Error::Meshing(format!("element {i} references a missing node")));
            }
            if self.element_area(e) <= 0.0 {
                return Err(Error::Meshing(format!("element {i} has non-positive area")));
            }
            self.material(e.region)?;
        }
        for l in &self.link_elements {
            if l.nodes.iter().any(|&v| v >= n) || l.nodes[0] == l.nodes[1] {
                return Err(Error::Meshing("link element with invalid end nodes".into()));
            }
        }
        let tol = PERIODIC_TOL * self.period;
        let ax = self.axis.index();
        for &(m, s) in &self.periodic_pairs {
            let (pm, ps) = (self.nodes[m], self.nodes[s]);
            let mut shifted = pm;
            shifted[ax] += self.period;
            if (shifted[0] - ps[0]).abs() > tol || (shifted[1] - ps[1]).abs() > tol {
                return Err(Error::Meshing(format!("periodic pair ({m}, {s}) is not congruent")));
            }
        }
        let masters: BTreeSet<usize> = self.periodic_pairs.iter().map(|p| p.0).collect();
        let slaves: BTreeSet<usize> = self.periodic_pairs.iter().map(|p| p.1).collect();
        if masters.len() != self.periodic_pairs.len() || slaves.len() != self.periodic_pairs.len() {
            return Err(Error::Meshing("periodic pairing is not one-to-one".into()));
        }
        if !masters.is_disjoint(&slaves) {
            return Err(Error::Meshing("a node is both periodic master and slave".into()));
        }
        Ok(())
    }
}

/// Builds the mesh for any cell variant.
pub fn build_cell(spec: &CellSpec, resolution: Resolution) -> Result<TaggedMesh> {
    match spec.geometry {
        Geometry::DeckPlain { .. } | Geometry::DeckWithResonators { .. } => build_deck_cell(spec, resolution),
        Geometry::FrameCell { .. } | Geometry::FrameCellWithResonator { .. } => build_frame_cell(spec, resolution),
    }
}
