//! Transition densities of the sampled processes: Fourier inversion from the
//! Lévy exponent, closed-form oracles for the Gaussian and gamma families,
//! and the pointwise density identity
//! `-σ²φ'_u(x) + ∫ν(dz) z φ_u(x - z) = (x/u) φ_u(x)`
//! that ties the local characteristics to the transition density of the
//! driftless process.

mod closed;
mod fourier;
mod identity;
pub(crate) mod quad;

pub use closed::{density_closed_form, ClosedFormFamily};
pub use fourier::{
    density_closed_grid, density_fourier, density_fourier_with, density_spatial_derivative,
    DensityGrid, DensityMethod, FourierOptions,
};
pub use identity::{check_identity, lemma_lhs, lemma_rhs, DensityRoute, IdentityOptions, IdentityReport};
pub use quad::GaussLegendre;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    /// The law has no density at the requested time (for example a pure
    /// compound Poisson law, which has an atom at zero). Adding a Gaussian
    /// component is the standard remedy.
    #[error("law has no density at time {u}: {reason}")]
    NoDensity { u: f64, reason: String },
    /// Spectral or spatial truncation cannot meet its budget.
    #[error("truncation budget exceeded: {0}")]
    TruncationBudgetExceeded(String),
    /// The convolution quadrature cannot cover the jump-measure support.
    #[error("quadrature budget exceeded: {0}")]
    QuadratureBudgetExceeded(String),
    /// Closed forms exist only for the Gaussian and gamma families.
    #[error("no closed-form density for this spec: {0}")]
    UnsupportedFamily(String),
    #[error("invalid density grid request: {0}")]
    InvalidGrid(String),
}
