//! Statistical engine: orthogonality estimators, confidence intervals,
//! family-wise error control and the deterministic seeding contract.
//!
//! Every probabilistic identity verified by this crate is reduced to a set of
//! statements of the form `E[X · g(Z)] = 0` for bounded test functions `g` of
//! declared conditioning coordinates `Z`. This module owns the estimator, the
//! test-function family, the Bonferroni thresholding and the seed-splitting
//! scheme that makes all of it reproducible.

mod ortho;
mod seed;
mod testfns;

pub use ortho::{
    familywise_threshold, mean_ci, mean_stderr, orthogonality_test, variance_stderr,
    OrthogonalityReport, ReportSet, ThresholdPolicy,
};
pub use seed::{map_paths, ReductionMode, RngSeed, SEED_SCHEME_VERSION};
pub use testfns::TestFunctionFamily;

use thiserror::Error;

/// Errors from the statistical engine.
#[derive(Debug, Error)]
pub enum StatsError {
    #[error("insufficient samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
