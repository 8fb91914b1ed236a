//! The past-future martingale constructions and their tower-property suite.
//!
//! Stochastic integrals `Σ f(t_i⁻)(ξ_{t_{i+1}} - ξ_{t_i})` are evaluated by
//! telescoping maximal runs of equal weights: each run contributes
//! `w · (ξ_end - ξ_start)`, touching only run-boundary nodes. Two exactness
//! properties follow. First, the gap term `(ξ_t - ξ_s)/(t - s) · ∫ₛᵗ f` has a
//! constant weight inside the gap, so path values strictly inside `(s, t)`
//! are never read and the masked-path measurability check holds bit for bit.
//! Second, with `f ≡ 1` on a dyadic grid all weights collapse to a single
//! run, making the Lévy construction equal to `ξ_U - ξ_0` bit for bit,
//! independent of the index pair.

use serde::{Deserialize, Serialize};

use super::detfn::DeterministicFn;
use super::PfmError;
use crate::levy::{sample_path_with_rng, ProcessSpec, SamplePath, TimeGrid};
use crate::mcstats::{
    map_paths, orthogonality_test, OrthogonalityReport, ReductionMode, ReportSet, RngSeed,
    TestFunctionFamily, ThresholdPolicy,
};

/// Index pair `(s, t)` with `0 ≤ s < t`: the gap of a past-future quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct PastFutureIndex {
    s: f64,
    t: f64,
}

impl TryFrom<(f64, f64)> for PastFutureIndex {
    type Error = PfmError;

    fn try_from(pair: (f64, f64)) -> Result<Self, Self::Error> {
        PastFutureIndex::new(pair.0, pair.1)
    }
}

impl From<PastFutureIndex> for (f64, f64) {
    fn from(ix: PastFutureIndex) -> Self {
        (ix.s, ix.t)
    }
}

impl PastFutureIndex {
    pub fn new(s: f64, t: f64) -> Result<Self, PfmError> {
        if !(s.is_finite() && t.is_finite() && 0.0 <= s && s < t) {
            return Err(PfmError::NotNested(format!("need 0 ≤ s < t, got ({s}, {t})")));
        }
        Ok(Self { s, t })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Whether `self` contains `inner` with at least one strict inclusion.
    pub fn strictly_contains(&self, inner: &PastFutureIndex) -> bool {
        self.s <= inner.s && inner.t <= self.t && (self.s, self.t) != (inner.s, inner.t)
    }
}

/// A construction evaluated at one index pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfmValue {
    pub index: PastFutureIndex,
    pub value: f64,
}

/// Compensator variant of the exponential example. `AsPrinted` keeps the
/// widely quoted form `+½∫f² ... + ((t-s)/2)K²`; `Derived` uses the
/// conditional-variance computation (see `docs/exponential-compensator.md`),
/// which flips the signs and replaces the factor by `1/(2(t-s))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpVariant {
    AsPrinted,
    Derived,
}

type Run = (usize, usize, f64);

fn weight_runs(weights: &[f64], offset: usize) -> Vec<Run> {
    let mut runs = Vec::new();
    if weights.is_empty() {
        return runs;
    }
    let mut start = 0usize;
    for k in 1..weights.len() {
        if weights[k].to_bits() != weights[start].to_bits() {
            runs.push((offset + start, offset + k, weights[start]));
            start = k;
        }
    }
    runs.push((offset + start, offset + weights.len(), weights[start]));
    runs
}

fn apply_runs(values: &[f64], runs: &[Run]) -> f64 {
    let mut total = 0.0;
    for &(a, b, w) in runs {
        total += w * (values[b] - values[a]);
    }
    total
}

fn integral_runs(
    f: &DeterministicFn,
    grid: &TimeGrid,
    i_from: usize,
    i_to: usize,
) -> Vec<Run> {
    let weights: Vec<f64> = (i_from..i_to).map(|i| f.eval_left(grid.node(i))).collect();
    weight_runs(&weights, i_from)
}

fn check_support(f: &DeterministicFn, grid: &TimeGrid) -> Result<(), PfmError> {
    let (lo, hi) = f.support();
    if f.is_zero() || (lo >= grid.t0() - 1e-12 && hi <= grid.horizon() + 1e-12) {
        Ok(())
    } else {
        Err(PfmError::InvalidFunction(format!(
            "support [{lo}, {hi}] exceeds the horizon [{}, {}]",
            grid.t0(),
            grid.horizon()
        )))
    }
}

/// `∫_{from}^{to} f(v⁻) dξ_v` on the grid: left-point (predictable)
/// evaluation, telescoped over constant-weight runs.
pub fn stochastic_integral(
    path: &SamplePath,
    f: &DeterministicFn,
    from: f64,
    to: f64,
) -> Result<f64, PfmError> {
    let i0 = path.grid.index_of(from)?;
    let i1 = path.grid.index_of(to)?;
    if i0 > i1 {
        return Err(PfmError::InvalidFunction(format!(
            "integration bounds reversed: {from} > {to}"
        )));
    }
    let runs = integral_runs(f, &path.grid, i0, i1);
    Ok(apply_runs(&path.values, &runs))
}

/// `Σ Δf(v) Δξ_v` over `v ∈ (from, to]`: products of simultaneous jumps of
/// the path and of `f`. Against the implemented samplers the path jump times
/// are continuous random variables, so the sum is almost surely zero; it is
/// kept so the construction implements its formula in full.
pub fn quadratic_covariation(
    path: &SamplePath,
    f: &DeterministicFn,
    from: f64,
    to: f64,
) -> Result<f64, PfmError> {
    if from > to {
        return Err(PfmError::InvalidFunction(format!(
            "covariation bounds reversed: {from} > {to}"
        )));
    }
    Ok(f.jumps()
        .iter()
        .filter(|(v, _)| *v > from && *v <= to)
        .map(|&(v, df)| df * path.jump_at(v))
        .sum())
}

/// Linear Brownian example:
/// `M_{s,t} = ∫₀ˢ f₋ dB + ∫_t^U f₊ dB + (B_t - B_s)/(t - s) · K` with
/// `K = C - ∫₀ˢ f₋ - ∫_t^U f₊`. The path must come from a standard Brownian
/// motion for the tower property to hold.
pub fn brownian_pfm_linear(
    path: &SamplePath,
    f_minus: &DeterministicFn,
    f_plus: &DeterministicFn,
    c: f64,
    index: PastFutureIndex,
) -> Result<PfmValue, PfmError> {
    let prepared = PreparedPfm::linear(&path.grid, f_minus, f_plus, c, index)?;
    Ok(PfmValue { index, value: prepared.eval(path) })
}

/// Exponential Brownian example:
/// `N_{s,t} = exp(M_{s,t} + A_{s,t})` with the compensator `A` chosen by the
/// variant. `Derived` makes the discrete tower identity exact; `AsPrinted`
/// is retained for comparison and fails the tower test.
pub fn brownian_pfm_exponential(
    path: &SamplePath,
    f_minus: &DeterministicFn,
    f_plus: &DeterministicFn,
    c: f64,
    index: PastFutureIndex,
    variant: ExpVariant,
) -> Result<PfmValue, PfmError> {
    let prepared = PreparedPfm::exponential(&path.grid, f_minus, f_plus, c, index, variant)?;
    Ok(PfmValue { index, value: prepared.eval(path) })
}

/// General Lévy construction:
/// `M_{s,t} = ∫₀ˢ f(v⁻)dξ + ∫_t^U f(v⁻)dξ + (ξ_t - ξ_s)/(t - s)·∫ₛᵗ f + [ξ,f]_s - [ξ,f]_t`.
/// The spec must be centered; deterministic integrals use the grid sums.
pub fn levy_pfm(
    spec: &ProcessSpec,
    path: &SamplePath,
    f: &DeterministicFn,
    index: PastFutureIndex,
) -> Result<PfmValue, PfmError> {
    if spec.mean_rate().abs() > 1e-12 {
        return Err(PfmError::NotCentered(spec.mean_rate()));
    }
    let prepared = PreparedPfm::levy(&path.grid, f, index)?;
    Ok(PfmValue { index, value: prepared.eval(path) })
}

/// Masked view of a path: values strictly inside the gap are zeroed (the
/// endpoints stay) and recorded jumps strictly inside the gap are dropped.
/// Construction values must be bit-identical on the masked and the original
/// path; that is the mechanical form of the measurability requirement.
pub fn masked_view(path: &SamplePath, index: PastFutureIndex) -> Result<SamplePath, PfmError> {
    let is = path.grid.index_of(index.s())?;
    let it = path.grid.index_of(index.t())?;
    let mut masked = path.clone();
    for v in &mut masked.values[is + 1..it] {
        *v = 0.0;
    }
    let (s, t) = (path.grid.node(is), path.grid.node(it));
    masked.jumps.retain(|&(v, _)| !(v > s && v < t));
    Ok(masked)
}

/// An index-specific evaluation plan; weights and deterministic sums are
/// path-independent and computed once.
enum PreparedPfm {
    Linear {
        runs_minus: Vec<Run>,
        runs_plus: Vec<Run>,
        k: f64,
        is: usize,
        it: usize,
        gap: f64,
    },
    Exponential {
        runs_minus: Vec<Run>,
        runs_plus: Vec<Run>,
        k: f64,
        is: usize,
        it: usize,
        gap: f64,
        compensator: f64,
    },
    Levy {
        runs: Vec<Run>,
        f_jumps: Vec<(f64, f64)>,
        s: f64,
        t: f64,
    },
}

impl PreparedPfm {
    fn gap_indices(
        grid: &TimeGrid,
        index: PastFutureIndex,
    ) -> Result<(usize, usize), PfmError> {
        let is = grid.index_of(index.s())?;
        let it = grid.index_of(index.t())?;
        if it >= grid.steps() {
            return Err(PfmError::InvalidConstruction(format!(
                "index t = {} must lie strictly inside the horizon {}",
                index.t(),
                grid.horizon()
            )));
        }
        Ok((is, it))
    }

    fn linear(
        grid: &TimeGrid,
        f_minus: &DeterministicFn,
        f_plus: &DeterministicFn,
        c: f64,
        index: PastFutureIndex,
    ) -> Result<Self, PfmError> {
        check_support(f_minus, grid)?;
        check_support(f_plus, grid)?;
        let (is, it) = Self::gap_indices(grid, index)?;
        let n = grid.steps();
        let k = c - f_minus.grid_sum(grid, 0, is) - f_plus.grid_sum(grid, it, n);
        Ok(PreparedPfm::Linear {
            runs_minus: integral_runs(f_minus, grid, 0, is),
            runs_plus: integral_runs(f_plus, grid, it, n),
            k,
            is,
            it,
            gap: grid.node(it) - grid.node(is),
        })
    }

    fn exponential(
        grid: &TimeGrid,
        f_minus: &DeterministicFn,
        f_plus: &DeterministicFn,
        c: f64,
        index: PastFutureIndex,
        variant: ExpVariant,
    ) -> Result<Self, PfmError> {
        let linear = Self::linear(grid, f_minus, f_plus, c, index)?;
        let PreparedPfm::Linear { runs_minus, runs_plus, k, is, it, gap } = linear else {
            unreachable!()
        };
        let n = grid.steps();
        let sum_minus_sq = f_minus.grid_sum_squares(grid, 0, is);
        let sum_plus_sq = f_plus.grid_sum_squares(grid, it, n);
        let compensator = match variant {
            ExpVariant::AsPrinted => {
                0.5 * sum_minus_sq + 0.5 * sum_plus_sq + 0.5 * gap * k * k
            }
            ExpVariant::Derived => {
                -0.5 * sum_minus_sq - 0.5 * sum_plus_sq - k * k / (2.0 * gap)
            }
        };
        Ok(PreparedPfm::Exponential { runs_minus, runs_plus, k, is, it, gap, compensator })
    }

    fn levy(
        grid: &TimeGrid,
        f: &DeterministicFn,
        index: PastFutureIndex,
    ) -> Result<Self, PfmError> {
        check_support(f, grid)?;
        let (is, it) = Self::gap_indices(grid, index)?;
        let n = grid.steps();
        let (s, t) = (grid.node(is), grid.node(it));
        let gap_weight = f.grid_sum(grid, is, it) / (t - s);
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                if i >= is && i < it {
                    gap_weight
                } else {
                    f.eval_left(grid.node(i))
                }
            })
            .collect();
        Ok(PreparedPfm::Levy { runs: weight_runs(&weights, 0), f_jumps: f.jumps(), s, t })
    }

    fn eval(&self, path: &SamplePath) -> f64 {
        match self {
            PreparedPfm::Linear { runs_minus, runs_plus, k, is, it, gap } => {
                let a = apply_runs(&path.values, runs_minus);
                let b = apply_runs(&path.values, runs_plus);
                let q = (path.values[*it] - path.values[*is]) / gap;
                a + b + q * k
            }
            PreparedPfm::Exponential { runs_minus, runs_plus, k, is, it, gap, compensator } => {
                let a = apply_runs(&path.values, runs_minus);
                let b = apply_runs(&path.values, runs_plus);
                let q = (path.values[*it] - path.values[*is]) / gap;
                (a + b + q * k + compensator).exp()
            }
            PreparedPfm::Levy { runs, f_jumps, s, t } => {
                let mut total = apply_runs(&path.values, runs);
                // [ξ,f]_s - [ξ,f]_t = -Σ_{(s,t]} Δf(v) Δξ_v.
                for &(v, df) in f_jumps {
                    if v > *s && v <= *t {
                        total -= df * path.jump_at(v);
                    }
                }
                total
            }
        }
    }
}

/// Which construction a tower-property suite exercises.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case")]
pub enum PfmConstruction {
    Linear { f_minus: DeterministicFn, f_plus: DeterministicFn, c: f64 },
    Exponential {
        f_minus: DeterministicFn,
        f_plus: DeterministicFn,
        c: f64,
        variant: ExpVariant,
    },
    Levy { f: DeterministicFn },
}

/// Tower-property suite configuration: for every `(inner, outer)` pair the
/// statistic `M_inner - M_outer` must be orthogonal to bounded functions of
/// `(ξ_{r/2}, ξ_r, ξ_u, ξ_{(u+U)/2})` where `(r, u)` is the outer gap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PfmSuiteConfig {
    pub spec: ProcessSpec,
    #[serde(flatten)]
    pub construction: PfmConstruction,
    /// Simulation horizon `U`; all supports and indices live inside `[0, U]`.
    pub u_horizon: f64,
    pub steps: usize,
    /// `(inner, outer)` index pairs, outer strictly containing inner.
    pub pairs: Vec<((f64, f64), (f64, f64))>,
    pub n_paths: usize,
    pub threshold: ThresholdPolicy,
    pub mode: ReductionMode,
}

pub fn pfm_tower_test(config: &PfmSuiteConfig, seed: RngSeed) -> Result<ReportSet, PfmError> {
    match config.construction {
        PfmConstruction::Linear { .. } | PfmConstruction::Exponential { .. } => {
            if !config.spec.is_standard_brownian() {
                return Err(PfmError::InvalidConstruction(
                    "the Brownian examples require the standard Brownian spec".to_string(),
                ));
            }
        }
        PfmConstruction::Levy { .. } => {
            if config.spec.mean_rate().abs() > 1e-12 {
                return Err(PfmError::NotCentered(config.spec.mean_rate()));
            }
        }
    }
    if config.pairs.is_empty() {
        return Err(PfmError::InvalidConstruction("pairs must be non-empty".to_string()));
    }
    let grid = TimeGrid::new(0.0, config.u_horizon, config.steps)?;

    struct PairPlan {
        label: String,
        inner: PreparedPfm,
        outer: PreparedPfm,
        cond: [usize; 4],
    }

    let mut plans = Vec::new();
    for &((s, t), (r, u)) in &config.pairs {
        let inner = PastFutureIndex::new(s, t)?;
        let outer = PastFutureIndex::new(r, u)?;
        if !outer.strictly_contains(&inner) {
            return Err(PfmError::NotNested(format!(
                "outer ({r}, {u}) must strictly contain inner ({s}, {t})"
            )));
        }
        let prepare = |ix: PastFutureIndex| -> Result<PreparedPfm, PfmError> {
            match &config.construction {
                PfmConstruction::Linear { f_minus, f_plus, c } => {
                    PreparedPfm::linear(&grid, f_minus, f_plus, *c, ix)
                }
                PfmConstruction::Exponential { f_minus, f_plus, c, variant } => {
                    PreparedPfm::exponential(&grid, f_minus, f_plus, *c, ix, *variant)
                }
                PfmConstruction::Levy { f } => PreparedPfm::levy(&grid, f, ix),
            }
        };
        plans.push(PairPlan {
            label: format!("tower (({s},{t}) in ({r},{u}))"),
            inner: prepare(inner)?,
            outer: prepare(outer)?,
            cond: [
                grid.index_of(r / 2.0)?,
                grid.index_of(r)?,
                grid.index_of(u)?,
                grid.index_of((u + config.u_horizon) / 2.0)?,
            ],
        });
    }

    let plans = &plans;
    let grid_ref = &grid;
    let spec = &config.spec;
    let simulate = move |i: u64, rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let path = sample_path_with_rng(spec, grid_ref, 0.0, seed, i, rng);
        let mut row = Vec::with_capacity(plans.len() * 5);
        for plan in plans {
            row.push(plan.inner.eval(&path) - plan.outer.eval(&path));
            for &ci in &plan.cond {
                row.push(path.values[ci]);
            }
        }
        row
    };

    let pilot = map_paths(10_000, seed.child(0x706c_6f74), config.mode, simulate);
    let main = map_paths(config.n_paths, seed, config.mode, simulate);

    let fam0 = TestFunctionFamily::standardized(&columns(&pilot, 0, 4));
    let threshold = config.threshold.threshold(fam0.len() * plans.len());

    let mut reports: Vec<OrthogonalityReport> = Vec::new();
    for (k, plan) in plans.iter().enumerate() {
        let base = k * 5;
        let fam = TestFunctionFamily::standardized(&columns(&pilot, base, 4));
        let x: Vec<f64> = main.iter().map(|row| row[base]).collect();
        let z = columns(&main, base, 4);
        reports.extend(orthogonality_test(&plan.label, &x, &z, &fam, threshold, 0)?);
    }
    Ok(ReportSet::new("pfm tower", reports))
}

fn columns(rows: &[Vec<f64>], base: usize, n_cols: usize) -> Vec<Vec<f64>> {
    (1..=n_cols)
        .map(|c| rows.iter().map(|row| row[base + c]).collect())
        .collect()
}
