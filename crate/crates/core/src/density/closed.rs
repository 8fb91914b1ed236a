//! Closed-form transition densities for the Gaussian and gamma families,
//! used as oracles against the Fourier inversion and as exact density
//! sources for bridge weighting.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::DensityError;
use crate::levy::{JumpSpec, ProcessSpec};

/// Families whose transition density is available in closed form. The drift
/// shifts the density; the shape is Gaussian (`N(d·u, σ²u)`) or gamma
/// (`Gamma(a·u, b)` translated by `d·u`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClosedFormFamily {
    Gaussian { drift: f64, var_rate: f64 },
    Gamma { a: f64, b: f64, drift: f64 },
}

impl ClosedFormFamily {
    /// Closed form for the spec, if one exists.
    pub fn from_spec(spec: &ProcessSpec) -> Result<Self, DensityError> {
        let v = spec.gaussian_var();
        match *spec.jumps() {
            JumpSpec::None if v > 0.0 => {
                Ok(ClosedFormFamily::Gaussian { drift: spec.drift(), var_rate: v })
            }
            JumpSpec::GammaSubordinator { a, b } if v == 0.0 => {
                Ok(ClosedFormFamily::Gamma { a, b, drift: spec.drift() })
            }
            _ => Err(DensityError::UnsupportedFamily(format!(
                "no closed form for gaussian_var={v} jumps={:?}",
                spec.jumps()
            ))),
        }
    }

    /// Density of `ξ_u` at `x`.
    pub fn pdf(&self, u: f64, x: f64) -> f64 {
        match *self {
            ClosedFormFamily::Gaussian { drift, var_rate } => {
                let v = var_rate * u;
                let d = x - drift * u;
                (-0.5 * d * d / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            }
            ClosedFormFamily::Gamma { a, b, drift } => {
                let t = x - drift * u;
                if t <= 0.0 {
                    return 0.0;
                }
                let shape = a * u;
                (shape * b.ln() + (shape - 1.0) * t.ln() - b * t - ln_gamma(shape)).exp()
            }
        }
    }

    /// Spatial derivative `φ'_u(x)`; zero off the support.
    pub fn pdf_deriv(&self, u: f64, x: f64) -> f64 {
        match *self {
            ClosedFormFamily::Gaussian { drift, var_rate } => {
                let v = var_rate * u;
                -(x - drift * u) / v * self.pdf(u, x)
            }
            ClosedFormFamily::Gamma { a, b, drift } => {
                let t = x - drift * u;
                if t <= 0.0 {
                    return 0.0;
                }
                ((a * u - 1.0) / t - b) * self.pdf(u, x)
            }
        }
    }

    /// Variance of `ξ_u` (used by tests to size grids).
    pub fn variance(&self, u: f64) -> f64 {
        match *self {
            ClosedFormFamily::Gaussian { var_rate, .. } => var_rate * u,
            ClosedFormFamily::Gamma { a, b, .. } => a * u / (b * b),
        }
    }
}

/// Exact analytic density value for a supported family.
pub fn density_closed_form(family: &ClosedFormFamily, u: f64, x: f64) -> Result<f64, DensityError> {
    if !(u.is_finite() && u > 0.0) {
        return Err(DensityError::InvalidGrid(format!("time must be positive, got {u}")));
    }
    Ok(family.pdf(u, x))
}
