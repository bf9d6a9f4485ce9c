//! Six-node straight-sided triangle kernels for plane strain.

use crate::error::{Error, Result};
use crate::material::Material;

/// Degree-2 rule in area coordinates; weights sum to one.
pub(crate) const STIFFNESS_RULE: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

const DA: f64 = 0.445_948_490_915_965;
const DB: f64 = 0.108_103_018_168_070;
const DC: f64 = 0.091_576_213_509_771;
const DD: f64 = 0.816_847_572_980_459;
const WA: f64 = 0.223_381_589_678_011;
const WC: f64 = 0.109_951_743_655_322;

/// Six-point degree-4 rule; integrates products of quadratics exactly.
const MASS_RULE: [([f64; 3], f64); 6] = [
    ([DA, DA, DB], WA),
    ([DA, DB, DA], WA),
    ([DB, DA, DA], WA),
    ([DC, DC, DD], WC),
    ([DC, DD, DC], WC),
    ([DD, DC, DC], WC),
];

pub fn shape(l: [f64; 3]) -> [f64; 6] {
    let [a, b, c] = l;
    [a * (2.0 * a - 1.0), b * (2.0 * b - 1.0), c * (2.0 * c - 1.0), 4.0 * a * b, 4.0 * b * c, 4.0 * c * a]
}

/// Derivatives of the shape functions with respect to the area coordinates.
fn shape_dl(l: [f64; 3]) -> [[f64; 3]; 6] {
    let [a, b, c] = l;
    [
        [4.0 * a - 1.0, 0.0, 0.0],
        [0.0, 4.0 * b - 1.0, 0.0],
        [0.0, 0.0, 4.0 * c - 1.0],
        [4.0 * b, 4.0 * a, 0.0],
        [0.0, 4.0 * c, 4.0 * b],
        [4.0 * c, 0.0, 4.0 * a],
    ]
}

/// Element geometry: signed area and the Cartesian gradients of the area coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(corners: [[f64; 2]; 3], element: usize) -> Result<Self> {
        let [p1, p2, p3] = corners;
        let det = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
        let scale = [p1, p2, p3].iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if !(det > 1e-14 * scale * scale) {
            return Err(Error::Assembly { element, reason: format!("non-positive Jacobian determinant {det:.3e}") });
        }
        let grad_l = [
            [(p2[1] - p3[1]) / det, (p3[0] - p2[0]) / det],
            [(p3[1] - p1[1]) / det, (p1[0] - p3[0]) / det],
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        ];
        Ok(TriangleGeometry { area: 0.5 * det, grad_l })
    }

    /// Cartesian gradients of the six shape functions at `l`.
    pub fn shape_gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let dl = shape_dl(l);
        let mut out = [[0.0; 2]; 6];
        for (i, row) in dl.iter().enumerate() {
            for (k, g) in self.grad_l.iter().enumerate() {
                out[i][0] += row[k] * g[0];
                out[i][1] += row[k] * g[1];
            }
        }
        out
    }
}

/// 12x12 stiffness in DOF order `(u0x, u0y, u1x, ...)`.
pub fn stiffness(geom: &TriangleGeometry, material: &Material) -> [[f64; 12]; 12] {
    let d = material.plane_strain_matrix();
    let mut ke = [[0.0; 12]; 12];
    for (l, w) in STIFFNESS_RULE {
        let g = geom.shape_gradients(l);
        // B is 3x12 with rows (exx, eyy, gxy).
        let mut b = [[0.0; 12]; 3];
        for i in 0..6 {
            b[0][2 * i] = g[i][0];
            b[1][2 * i + 1] = g[i][1];
            b[2][2 * i] = g[i][1];
            b[2][2 * i + 1] = g[i][0];
        }
        let mut db = [[0.0; 12]; 3];
        for r in 0..3 {
            for c in 0..12 {
                db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
            }
        }
        let f = w * geom.area;
        for r in 0..12 {
            for c in 0..12 {
                ke[r][c] += f * (0..3).map(|k| b[k][r] * db[k][c]).sum::<f64>();
            }
        }
    }
    ke
}

/// Consistent 6x6 scalar mass matrix `rho * int N_i N_j`; the same block
/// applies to both displacement components.
pub fn scalar_mass(geom: &TriangleGeometry, rho: f64) -> [[f64; 6]; 6] {
    let mut me = [[0.0; 6]; 6];
    for (l, w) in MASS_RULE {
        let n = shape(l);
        let f = rho * w * geom.area;
        for i in 0..6 {
            for j in 0..6 {
                me[i][j] += f * n[i] * n[j];
            }
        }
    }
    me
}

/// Stress `(sxx, syy, sxy)` at area coordinates `l` for element displacements `u`.
pub fn stress(geom: &TriangleGeometry, material: &Material, u: &[f64; 12], l: [f64; 3]) -> [f64; 3] {
    let g = geom.shape_gradients(l);
    let mut strain = [0.0; 3];
    for i in 0..6 {
        strain[0] += g[i][0] * u[2 * i];
        strain[1] += g[i][1] * u[2 * i + 1];
        strain[2] += g[i][1] * u[2 * i] + g[i][0] * u[2 * i + 1];
    }
    let d = material.plane_strain_matrix();
    [0, 1, 2].map(|r| (0..3).map(|k| d[r][k] * strain[k]).sum())
}
