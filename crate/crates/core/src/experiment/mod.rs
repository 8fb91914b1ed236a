//! Declarative experiment runner: JSON configs in, JSON reports and
//! plot-ready CSV out. The CLI binary is a thin shell around [`run`].

mod config;
mod runner;

pub use config::{
    AllConfig, BridgeCheckConfig, ExperimentConfig, HarnessCheckConfig, IdentityCheckConfig,
    PfmCheckConfig, PfmKind, SimulateConfig, XsRange, CONFIG_SCHEMA,
};
pub use runner::{run, Report, RunError, RunOutput, SuiteOutcome};
