//! Simulation and verification laboratory for integrable Lévy processes.
//!
//! The crate bundles samplers for a small family of Lévy processes (Brownian
//! motion with drift, compound Poisson, gamma subordinator), transition-density
//! evaluation by Fourier inversion and closed forms, exact and approximate
//! bridge constructions, harness functionals, past-future martingale
//! constructions, and a Monte Carlo orthogonality engine that turns
//! conditional-expectation identities into quantitative pass/fail tests.
//!
//! Everything is deterministic given a root seed: per-path generators are
//! derived by counter-based stream splitting, so results do not depend on how
//! work is scheduled across threads.

pub mod bridges;
pub mod density;
pub mod experiment;
pub mod harness;
pub mod levy;
pub mod mcstats;
pub mod pfm;

pub use bridges::{BridgeDensity, BridgeError, BridgeEstimate, BridgeSpec, DecomposedPath};
pub use density::{
    ClosedFormFamily, DensityError, DensityGrid, DensityRoute, IdentityReport,
};
pub use harness::{HarnessError, HarnessResidual, SlopeResidual};
pub use levy::{JumpLaw, JumpSpec, LevyError, ProcessSpec, SamplePath, TimeGrid};
pub use mcstats::{
    familywise_threshold, mean_ci, OrthogonalityReport, ReductionMode, ReportSet, RngSeed,
    StatsError, TestFunctionFamily, ThresholdPolicy,
};
pub use pfm::{DeterministicFn, ExpVariant, PastFutureIndex, PfmError, PfmValue};
