//! Past-future martingales: two-parameter processes `M_{s,t}` indexed by the
//! gap `(s, t)`, measurable with respect to the path outside the gap, with
//! `E[M_{s,t} | F_{r,u}] = M_{r,u}` whenever `(r, u)` contains `(s, t)`.
//!
//! Implemented constructions: the linear and exponential Brownian examples
//! built from deterministic integrands `f_-`, `f_+`, and the general Lévy
//! construction `∫₀ˢ f(v⁻)dξ + ∫_t^U f(v⁻)dξ + (ξ_t-ξ_s)/(t-s)·∫ₛᵗ f + [ξ,f]_s - [ξ,f]_t`.
//! Deterministic integrals of `f` use the same left-endpoint grid sums as the
//! stochastic integrals, which makes the discrete tower property exact and
//! the orthogonality tests unbiased.

mod constructions;
mod detfn;

pub use constructions::{
    brownian_pfm_exponential, brownian_pfm_linear, levy_pfm, masked_view, pfm_tower_test,
    quadratic_covariation, stochastic_integral, ExpVariant, PastFutureIndex, PfmConstruction,
    PfmSuiteConfig, PfmValue,
};
pub use detfn::DeterministicFn;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PfmError {
    #[error(transparent)]
    Levy(#[from] crate::levy::LevyError),
    #[error(transparent)]
    Stats(#[from] crate::mcstats::StatsError),
    #[error("index pairs are not nested: {0}")]
    NotNested(String),
    #[error("spec must be centered (mean rate 0), got mean rate {0}")]
    NotCentered(f64),
    #[error("invalid deterministic function: {0}")]
    InvalidFunction(String),
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),
}
