//! Experiment configuration: strict parsing (unknown fields and unknown
//! kinds are rejected) plus canonical serialization for byte-stable report
//! echoes.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::density::DensityRoute;
use crate::levy::{ProcessSpec, TimeGrid};
use crate::mcstats::{ReductionMode, ThresholdPolicy};
use crate::pfm::{DeterministicFn, ExpVariant};

/// JSON Schema shipped with the binary (`--print-schema`).
pub const CONFIG_SCHEMA: &str = include_str!("../../../../docs/config.schema.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub spec: ProcessSpec,
    pub grid: TimeGrid,
    #[serde(default)]
    pub start: f64,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub reduction: Option<ReductionMode>,
    /// Emit `simulate_paths.csv` (long format: path,t,value).
    #[serde(default)]
    pub emit_paths_csv: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessCheckConfig {
    pub spec: ProcessSpec,
    pub triples: Vec<(f64, f64, f64)>,
    #[serde(default)]
    pub quads: Vec<(f64, f64, f64, f64)>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default = "default_horizon_factor")]
    pub horizon_factor: f64,
    #[serde(default = "default_harness_steps")]
    pub steps: usize,
    #[serde(default)]
    pub threshold: Option<ThresholdPolicy>,
    #[serde(default)]
    pub planted_bias: Option<f64>,
    #[serde(default)]
    pub reduction: Option<ReductionMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeCheckConfig {
    pub spec: ProcessSpec,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub x: f64,
    pub y: f64,
    pub t_points: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default = "default_sde_steps")]
    pub sde_steps: usize,
    /// Density source for the weighting route (closed form by default).
    #[serde(default)]
    pub density_route: Option<DensityRoute>,
    /// Euler bias budget added to the 3-combined-stderr tolerance of the
    /// exact-vs-SDE comparison.
    #[serde(default = "default_bias_budget")]
    pub bias_budget: f64,
    #[serde(default)]
    pub reduction: Option<ReductionMode>,
    /// Emit `bridge-check_decomposed.csv` for one free path.
    #[serde(default)]
    pub emit_decomposed_csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PfmKind {
    Linear,
    Exponential,
    Levy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfmCheckConfig {
    pub construction: PfmKind,
    pub spec: ProcessSpec,
    #[serde(default)]
    pub f: Option<DeterministicFn>,
    #[serde(default)]
    pub f_minus: Option<DeterministicFn>,
    #[serde(default)]
    pub f_plus: Option<DeterministicFn>,
    #[serde(default, rename = "C")]
    pub c: f64,
    #[serde(rename = "U")]
    pub u_horizon: f64,
    pub pairs: Vec<((f64, f64), (f64, f64))>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub exp_variant: Option<ExpVariant>,
    #[serde(default = "default_pfm_steps")]
    pub steps: usize,
    #[serde(default)]
    pub threshold: Option<ThresholdPolicy>,
    #[serde(default)]
    pub reduction: Option<ReductionMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XsRange {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCheckConfig {
    pub spec: ProcessSpec,
    pub us: Vec<f64>,
    pub route: DensityRoute,
    #[serde(default)]
    pub xs: Option<XsRange>,
    /// Pass criterion on the max absolute error.
    #[serde(default)]
    pub tol_abs: Option<f64>,
    /// Pass criterion on the max relative error over the bulk.
    #[serde(default)]
    pub tol_rel: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllConfig {
    pub seed: u64,
    #[serde(default = "default_all_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub reduction: Option<ReductionMode>,
}

fn default_horizon_factor() -> f64 {
    2.0
}
fn default_harness_steps() -> usize {
    72
}
fn default_sde_steps() -> usize {
    1 << 12
}
fn default_bias_budget() -> f64 {
    5e-3
}
fn default_pfm_steps() -> usize {
    40
}
fn default_all_paths() -> usize {
    20_000
}

/// One experiment: the `kind` field selects the suite, the rest is
/// kind-specific.
#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    Simulate(SimulateConfig),
    HarnessCheck(HarnessCheckConfig),
    BridgeCheck(BridgeCheckConfig),
    PfmCheck(PfmCheckConfig),
    IdentityCheck(IdentityCheckConfig),
    All(AllConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate(_) => "simulate",
            ExperimentConfig::HarnessCheck(_) => "harness-check",
            ExperimentConfig::BridgeCheck(_) => "bridge-check",
            ExperimentConfig::PfmCheck(_) => "pfm-check",
            ExperimentConfig::IdentityCheck(_) => "identity-check",
            ExperimentConfig::All(_) => "all",
        }
    }

    /// Strict parse: the `kind` field dispatches, unknown fields anywhere are
    /// rejected.
    pub fn from_json(json: &str) -> Result<Self, String> {
        let mut value: Value =
            serde_json::from_str(json).map_err(|e| format!("invalid JSON: {e}"))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| "config must be a JSON object".to_string())?;
        let kind = obj
            .remove("kind")
            .and_then(|k| k.as_str().map(str::to_string))
            .ok_or_else(|| "config requires a string field \"kind\"".to_string())?;
        let parse_err = |e: serde_json::Error| format!("invalid {kind} config: {e}");
        match kind.as_str() {
            "simulate" => Ok(Self::Simulate(serde_json::from_value(value).map_err(parse_err)?)),
            "harness-check" => {
                Ok(Self::HarnessCheck(serde_json::from_value(value).map_err(parse_err)?))
            }
            "bridge-check" => {
                Ok(Self::BridgeCheck(serde_json::from_value(value).map_err(parse_err)?))
            }
            "pfm-check" => Ok(Self::PfmCheck(serde_json::from_value(value).map_err(parse_err)?)),
            "identity-check" => {
                Ok(Self::IdentityCheck(serde_json::from_value(value).map_err(parse_err)?))
            }
            "all" => Ok(Self::All(serde_json::from_value(value).map_err(parse_err)?)),
            other => Err(format!(
                "unknown kind {other:?}; expected one of simulate, harness-check, \
                 bridge-check, pfm-check, identity-check, all"
            )),
        }
    }

    /// Canonical JSON value (alphabetical keys) including the `kind` tag;
    /// reports embed this echo and re-running it reproduces them byte for
    /// byte.
    pub fn to_value(&self) -> Value {
        let mut value = match self {
            ExperimentConfig::Simulate(c) => serde_json::to_value(c),
            ExperimentConfig::HarnessCheck(c) => serde_json::to_value(c),
            ExperimentConfig::BridgeCheck(c) => serde_json::to_value(c),
            ExperimentConfig::PfmCheck(c) => serde_json::to_value(c),
            ExperimentConfig::IdentityCheck(c) => serde_json::to_value(c),
            ExperimentConfig::All(c) => serde_json::to_value(c),
        }
        .expect("config serialization cannot fail");
        value
            .as_object_mut()
            .expect("configs are objects")
            .insert("kind".to_string(), Value::String(self.kind().to_string()));
        value
    }

    /// Root seed override (CLI `--seed`).
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Simulate(c) => c.seed = seed,
            ExperimentConfig::HarnessCheck(c) => c.seed = seed,
            ExperimentConfig::BridgeCheck(c) => c.seed = seed,
            ExperimentConfig::PfmCheck(c) => c.seed = seed,
            ExperimentConfig::IdentityCheck(_) => {}
            ExperimentConfig::All(c) => c.seed = seed,
        }
    }

    /// Force sequential reduction (CLI `--sequential`).
    pub fn set_sequential(&mut self) {
        let slot = match self {
            ExperimentConfig::Simulate(c) => &mut c.reduction,
            ExperimentConfig::HarnessCheck(c) => &mut c.reduction,
            ExperimentConfig::BridgeCheck(c) => &mut c.reduction,
            ExperimentConfig::PfmCheck(c) => &mut c.reduction,
            ExperimentConfig::All(c) => &mut c.reduction,
            ExperimentConfig::IdentityCheck(_) => return,
        };
        *slot = Some(ReductionMode::Sequential);
    }
}
