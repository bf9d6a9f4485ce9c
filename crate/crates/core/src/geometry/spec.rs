//! Parametric description of one elementary cell, read from JSON.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Axis;
use crate::error::{Error, Result};
use crate::material::Material;

pub const SCHEMA_VERSION: u32 = 1;

/// Default deck Poisson ratio; the bridge deck's value is not known.
pub const DEFAULT_DECK_POISSON: f64 = 0.3;

/// Default cross-section width assigned to bar links when computing their mass.
pub const DEFAULT_LINK_WIDTH: f64 = 0.02;

/// Default centre-to-centre spacing of the frame resonator's ligaments.
pub const DEFAULT_LIGAMENT_PITCH: f64 = 0.06;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub schema_version: u32,
    /// Period `d` along the periodicity axis [m].
    pub period: f64,
    pub geometry: Geometry,
    /// Region key (`deck`, `disk`, `frame`, `resonator`) to material.
    pub materials: BTreeMap<String, Material>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    DeckPlain {
        deck_thickness: f64,
        #[serde(default)]
        support: SupportSpec,
    },
    DeckWithResonators {
        deck_thickness: f64,
        #[serde(default)]
        support: SupportSpec,
        resonators: DeckResonators,
    },
    FrameCell {
        wall_thickness: f64,
    },
    FrameCellWithResonator {
        wall_thickness: f64,
        resonator: FrameResonator,
    },
}

/// Where the deck rests on its pillars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportSpec {
    #[serde(default)]
    pub location: SupportLocation,
    /// Extent of the clamped patch [m]; zero pins a single node.
    #[serde(default)]
    pub width: f64,
}

impl Default for SupportSpec {
    fn default() -> Self {
        SupportSpec { location: SupportLocation::Midline, width: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportLocation {
    /// On the cell end faces, centred on the deck midline.
    #[default]
    Midline,
    /// On the deck underside, centred on each cell end.
    Underside,
}

/// Two disks hanging below the deck on a truss of bar links.
///
/// Both disk centres sit `disk_depth` below the deck midline, `disk_spacing`
/// apart and centred in the span, so the link between them is horizontal. Each
/// disk hangs from two diagonal links leaving its centre line at `link_angle`
/// on either side of the vertical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckResonators {
    /// Radii `[r1, r2]` of the left and right disks [m].
    pub disk_radii: [f64; 2],
    /// Horizontal distance between disk centres [m].
    pub disk_spacing: f64,
    /// Depth of the disk centres below the deck midline [m].
    pub disk_depth: f64,
    /// Angle of the diagonal links from the vertical [rad].
    pub link_angle: f64,
    /// Spring constant of each diagonal link per unit depth [Pa].
    pub diagonal_stiffness: f64,
    /// Spring constant of the horizontal link per unit depth [Pa].
    pub horizontal_stiffness: f64,
    /// Mass density of the link material [kg/m^3].
    pub link_density: f64,
    /// Cross-section width used for link mass [m].
    #[serde(default = "default_link_width")]
    pub link_width: f64,
}

fn default_link_width() -> f64 {
    DEFAULT_LINK_WIDTH
}

/// A rectangular block hanging from the ceiling of the frame cell on parallel ligaments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameResonator {
    pub block_width: f64,
    pub block_height: f64,
    pub ligament_length: f64,
    pub ligament_width: f64,
    pub ligament_count: usize,
    /// Centre-to-centre ligament spacing [m].
    #[serde(default = "default_ligament_pitch")]
    pub ligament_pitch: f64,
}

fn default_ligament_pitch() -> f64 {
    DEFAULT_LIGAMENT_PITCH
}

/// Deck attachment and disk rim points of one diagonal link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalLink {
    pub disk: usize,
    pub rim: [f64; 2],
    pub deck: [f64; 2],
}

impl DeckResonators {
    /// The two-disk truss of the bridge example.
    pub fn bridge_example() -> Self {
        DeckResonators {
            disk_radii: [0.1, 0.075],
            disk_spacing: 1.0,
            disk_depth: 2.0,
            link_angle: PI / 6.0,
            diagonal_stiffness: 0.14e9,
            horizontal_stiffness: 0.018e9,
            link_density: 200.0,
            link_width: DEFAULT_LINK_WIDTH,
        }
    }

    pub fn disk_centers(&self, period: f64) -> [[f64; 2]; 2] {
        let mid = 0.5 * period;
        [[mid - 0.5 * self.disk_spacing, -self.disk_depth], [mid + 0.5 * self.disk_spacing, -self.disk_depth]]
    }

    /// Diagonal links in the order (disk 0 left, disk 0 right, disk 1 left, disk 1 right).
    pub fn diagonal_links(&self, period: f64, deck_thickness: f64) -> [DiagonalLink; 4] {
        let centers = self.disk_centers(period);
        let (s, c) = self.link_angle.sin_cos();
        let rise = self.disk_depth - 0.5 * deck_thickness;
        let mut out = [DiagonalLink { disk: 0, rim: [0.0; 2], deck: [0.0; 2] }; 4];
        for (i, center) in centers.iter().enumerate() {
            let r = self.disk_radii[i];
            for (j, sign) in [-1.0, 1.0].into_iter().enumerate() {
                out[2 * i + j] = DiagonalLink {
                    disk: i,
                    rim: [center[0] + sign * r * s, center[1] + r * c],
                    deck: [center[0] + sign * rise * s / c, -0.5 * deck_thickness],
                };
            }
        }
        out
    }

    /// Rim points joined by the horizontal link.
    pub fn horizontal_link(&self, period: f64) -> ([f64; 2], [f64; 2]) {
        let [c0, c1] = self.disk_centers(period);
        ([c0[0] + self.disk_radii[0], c0[1]], [c1[0] - self.disk_radii[1], c1[1]])
    }
}

impl FrameResonator {
    pub fn skyscraper_example() -> Self {
        FrameResonator {
            block_width: 0.3,
            block_height: 0.14,
            ligament_length: 0.2,
            ligament_width: 0.01,
            ligament_count: 3,
            ligament_pitch: DEFAULT_LIGAMENT_PITCH,
        }
    }

    /// Horizontal centres of the ligaments.
    pub fn ligament_centers(&self, period: f64) -> Vec<f64> {
        let n = self.ligament_count as f64;
        (0..self.ligament_count).map(|i| 0.5 * period + (i as f64 - 0.5 * (n - 1.0)) * self.ligament_pitch).collect()
    }
}

impl CellSpec {
    /// One bridge span: `d = 4 m`, `s = 0.2 m`, steel deck.
    pub fn bridge_deck(with_resonators: bool) -> Self {
        let mut materials = BTreeMap::new();
        materials.insert("deck".to_string(), Material::steel(DEFAULT_DECK_POISSON));
        let geometry = if with_resonators {
            materials.insert("disk".to_string(), Material::steel(DEFAULT_DECK_POISSON));
            Geometry::DeckWithResonators {
                deck_thickness: 0.2,
                support: SupportSpec::default(),
                resonators: DeckResonators::bridge_example(),
            }
        } else {
            Geometry::DeckPlain { deck_thickness: 0.2, support: SupportSpec::default() }
        };
        CellSpec { schema_version: SCHEMA_VERSION, period: 4.0, geometry, materials }
    }

    /// One storey of the skyscraper: 1 m square frame, 0.1 m walls.
    pub fn skyscraper_storey(with_resonator: bool) -> Self {
        let steel = Material::from_shear_poisson(80e9, 0.28, 7850.0).expect("valid constants");
        let mut materials = BTreeMap::new();
        materials.insert("frame".to_string(), steel);
        let geometry = if with_resonator {
            materials.insert("resonator".to_string(), steel);
            Geometry::FrameCellWithResonator { wall_thickness: 0.1, resonator: FrameResonator::skyscraper_example() }
        } else {
            Geometry::FrameCell { wall_thickness: 0.1 }
        };
        CellSpec { schema_version: SCHEMA_VERSION, period: 1.0, geometry, materials }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: CellSpec = serde_json::from_str(text).map_err(|e| Error::invalid(format!("cell spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cell spec serializes")
    }

    pub fn axis(&self) -> Axis {
        match self.geometry {
            Geometry::DeckPlain { .. } | Geometry::DeckWithResonators { .. } => Axis::Horizontal,
            Geometry::FrameCell { .. } | Geometry::FrameCellWithResonator { .. } => Axis::Vertical,
        }
    }

    /// Region key of the host structure whose shear speed normalizes frequencies.
    pub fn host_key(&self) -> &'static str {
        match self.axis() {
            Axis::Horizontal => "deck",
            Axis::Vertical => "frame",
        }
    }

    pub fn host_material(&self) -> Result<Material> {
        self.material(self.host_key())
    }

    pub fn material(&self, key: &str) -> Result<Material> {
        self.materials.get(key).copied().ok_or_else(|| Error::invalid(format!("no material given for region `{key}`")))
    }

    /// Region keys that need a material for this geometry.
    pub fn required_regions(&self) -> &'static [&'static str] {
        match self.geometry {
            Geometry::DeckPlain { .. } => &["deck"],
            Geometry::DeckWithResonators { .. } => &["deck", "disk"],
            Geometry::FrameCell { .. } => &["frame"],
            Geometry::FrameCellWithResonator { .. } => &["frame", "resonator"],
        }
    }

    /// Checks everything that can be checked without meshing.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        positive("period", self.period)?;
        for key in self.required_regions() {
            self.material(key)?;
        }
        let d = self.period;
        match &self.geometry {
            Geometry::DeckPlain { deck_thickness, support } => {
                positive("deck_thickness", *deck_thickness)?;
                check_support(support, d, *deck_thickness)?;
            }
            Geometry::DeckWithResonators { deck_thickness, support, resonators } => {
                positive("deck_thickness", *deck_thickness)?;
                check_support(support, d, *deck_thickness)?;
                check_deck_resonators(resonators, d, *deck_thickness, support)?;
            }
            Geometry::FrameCell { wall_thickness } => check_frame(d, *wall_thickness)?,
            Geometry::FrameCellWithResonator { wall_thickness, resonator } => {
                check_frame(d, *wall_thickness)?;
                check_frame_resonator(resonator, d, *wall_thickness)?;
            }
        }
        Ok(())
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {value}")))
    }
}

fn nonnegative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be non-negative, got {value}")))
    }
}

fn check_support(support: &SupportSpec, d: f64, s: f64) -> Result<()> {
    nonnegative("support.width", support.width)?;
    let limit = match support.location {
        SupportLocation::Midline => s,
        SupportLocation::Underside => d,
    };
    if support.width >= limit {
        return Err(Error::infeasible(format!(
            "support patch width {} does not fit (must be below {limit})",
            support.width
        )));
    }
    Ok(())
}

fn check_deck_resonators(r: &DeckResonators, d: f64, s: f64, support: &SupportSpec) -> Result<()> {
    for (i, radius) in r.disk_radii.iter().enumerate() {
        if !(*radius > 0.0) {
            return Err(Error::invalid(format!("disk {} has degenerate radius {radius}", i + 1)));
        }
    }
    positive("disk_spacing", r.disk_spacing)?;
    positive("disk_depth", r.disk_depth)?;
    nonnegative("diagonal_stiffness", r.diagonal_stiffness)?;
    nonnegative("horizontal_stiffness", r.horizontal_stiffness)?;
    nonnegative("link_density", r.link_density)?;
    positive("link_width", r.link_width)?;
    if !(r.link_angle > 0.0 && r.link_angle < 0.5 * PI) {
        return Err(Error::invalid(format!("link_angle must lie in (0, pi/2), got {}", r.link_angle)));
    }
    let [r1, r2] = r.disk_radii;
    if r.disk_spacing <= r1 + r2 {
        return Err(Error::infeasible("disks overlap"));
    }
    let max_r = r1.max(r2);
    if r.disk_depth - max_r <= 0.5 * s {
        return Err(Error::infeasible("disks intersect the deck"));
    }
    if r.disk_depth + max_r >= d {
        return Err(Error::infeasible(format!(
            "resonator reaches {} m below the deck, deeper than the cell allows ({d} m)",
            r.disk_depth + max_r
        )));
    }
    let centers = r.disk_centers(d);
    if centers[0][0] - r1 <= 0.0 || centers[1][0] + r2 >= d {
        return Err(Error::infeasible("disks extend past the cell ends"));
    }
    let patch = match support.location {
        SupportLocation::Underside => 0.5 * support.width,
        SupportLocation::Midline => 0.0,
    };
    let mut xs: Vec<f64> = r.diagonal_links(d, s).iter().map(|l| l.deck[0]).collect();
    for &x in &xs {
        if x <= patch || x >= d - patch {
            return Err(Error::infeasible(format!(
                "diagonal link reaches the deck at x = {x:.4} m, outside the free span"
            )));
        }
    }
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[1] - w[0] < 1e-6 * d) {
        return Err(Error::infeasible("two diagonal links share a deck attachment point"));
    }
    Ok(())
}

fn check_frame(d: f64, s: f64) -> Result<()> {
    positive("wall_thickness", s)?;
    if 2.0 * s >= d {
        return Err(Error::infeasible("frame walls leave no interior"));
    }
    Ok(())
}

fn check_frame_resonator(r: &FrameResonator, d: f64, s: f64) -> Result<()> {
    if r.ligament_count < 1 {
        return Err(Error::invalid("the resonator needs at least one ligament"));
    }
    positive("ligament_width", r.ligament_width)?;
    positive("ligament_length", r.ligament_length)?;
    positive("block_width", r.block_width)?;
    positive("block_height", r.block_height)?;
    if r.ligament_count > 1 && r.ligament_pitch <= r.ligament_width {
        return Err(Error::infeasible("ligaments overlap (pitch not larger than width)"));
    }
    let interior = d - 2.0 * s;
    if r.ligament_length + r.block_height >= interior {
        return Err(Error::infeasible(format!(
            "ligament ({} m) and block ({} m) do not fit the {interior} m interior span",
            r.ligament_length, r.block_height
        )));
    }
    if r.block_width >= interior {
        return Err(Error::infeasible("block is wider than the frame interior"));
    }
    let half_spread = 0.5 * (r.ligament_count as f64 - 1.0) * r.ligament_pitch + 0.5 * r.ligament_width;
    if half_spread > 0.5 * r.block_width + 1e-12 {
        return Err(Error::infeasible("ligaments extend beyond the block"));
    }
    Ok(())
}
