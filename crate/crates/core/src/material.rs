//! Isotropic plane-strain materials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when both `lambda` and `nu` are supplied.
const LAME_CONSISTENCY_TOL: f64 = 1e-9;

/// Isotropic linear elastic material, described by its Lamé moduli and density.
///
/// Deserializes from `{ "mu", "rho" }` plus either `"nu"` or `"lambda"` (or both,
/// in which case they must agree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaterialInput", into = "MaterialInput")]
pub struct Material {
    mu: f64,
    lambda: f64,
    rho: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialInput {
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    rho: f64,
}

impl TryFrom<MaterialInput> for Material {
    type Error = Error;

    fn try_from(input: MaterialInput) -> Result<Self> {
        match (input.lambda, input.nu) {
            (None, Some(nu)) => Material::from_shear_poisson(input.mu, nu, input.rho),
            (Some(lambda), None) => Material::from_lame(lambda, input.mu, input.rho),
            (Some(lambda), Some(nu)) => {
                let m = Material::from_shear_poisson(input.mu, nu, input.rho)?;
                let scale = lambda.abs().max(m.lambda.abs()).max(input.mu);
                if (m.lambda - lambda).abs() > LAME_CONSISTENCY_TOL * scale {
                    return Err(Error::invalid(format!(
                        "lambda = {lambda} is inconsistent with mu = {} and nu = {nu} (expected {})",
                        input.mu, m.lambda
                    )));
                }
                Ok(m)
            }
            (None, None) => Err(Error::invalid("material needs either `nu` or `lambda`")),
        }
    }
}

impl From<Material> for MaterialInput {
    fn from(m: Material) -> Self {
        MaterialInput { mu: m.mu, lambda: Some(m.lambda), nu: Some(m.poisson_ratio()), rho: m.rho }
    }
}

impl Material {
    pub fn from_lame(lambda: f64, mu: f64, rho: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("shear modulus must be positive, got {mu}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("density must be positive, got {rho}")));
        }
        // Plane-strain strain energy is positive definite iff lambda + mu > 0.
        if !(lambda.is_finite() && lambda + mu > 0.0) {
            return Err(Error::invalid(format!("lambda = {lambda} makes the plane-strain energy indefinite")));
        }
        Ok(Material { mu, lambda, rho })
    }

    /// `lambda = 2 mu nu / (1 - 2 nu)`.
    pub fn from_shear_poisson(mu: f64, nu: f64, rho: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&nu) {
            return Err(Error::invalid(format!("Poisson ratio must lie in [0, 0.5), got {nu}")));
        }
        Material::from_lame(2.0 * mu * nu / (1.0 - 2.0 * nu), mu, rho)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    /// Young's modulus `E = 2 mu (1 + nu)`.
    pub fn young_modulus(&self) -> f64 {
        2.0 * self.mu * (1.0 + self.poisson_ratio())
    }

    /// Bending modulus of a wide strip in plane strain, `E / (1 - nu^2)`.
    pub fn plane_strain_modulus(&self) -> f64 {
        let nu = self.poisson_ratio();
        self.young_modulus() / (1.0 - nu * nu)
    }

    /// Shear wave speed `sqrt(mu / rho)`.
    pub fn shear_speed(&self) -> f64 {
        (self.mu / self.rho).sqrt()
    }

    /// Steel as used for the bridge deck and the skyscraper frame.
    pub fn steel(nu: f64) -> Self {
        Material::from_shear_poisson(80e9, nu, 7850.0).expect("steel constants are valid")
    }

    /// Plane-strain constitutive matrix in Voigt order (xx, yy, xy with engineering shear).
    pub(crate) fn plane_strain_matrix(&self) -> [[f64; 3]; 3] {
        let l = self.lambda;
        let m = self.mu;
        [[l + 2.0 * m, l, 0.0], [l, l + 2.0 * m, 0.0], [0.0, 0.0, m]]
    }
}
