//! Bridge constructions and the enlarged-filtration decomposition.
//!
//! Three routes to bridge quantities are implemented and cross-checked:
//! the exact Brownian construction `x + (B_t - (t/T)B_T) + (t/T)(y - x)`,
//! the explicit-Euler solution of the bridge SDE
//! `X_t = x + β_t + ∫₀ᵗ (y - X_s)/(T - s) ds`, and importance weighting of
//! free paths by the density ratio `φ_{T-s}(y - ξ_s)/φ_T(y - x)`.
//!
//! Conditioning a Lévy path on its endpoint produces the decomposition
//! `ξ_t = M_t + ∫₀ᵗ (ξ_T - ξ_s)/(T - s) ds` with `M` a martingale in the
//! filtration enlarged by `ξ_T`; [`decompose`] extracts both terms on the
//! grid. The compensator uses left-endpoint sums, which never touch the
//! singular endpoint `s = T` and make the discrete martingale property exact
//! (the conditional mean of a Lévy increment given the endpoints is exactly
//! the linear-interpolation slope).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{
    density_fourier_with, ClosedFormFamily, DensityError, DensityGrid, DensityRoute,
    FourierOptions,
};
use crate::levy::{sample_path, LevyError, ProcessSpec, SamplePath, TimeGrid};
use crate::mcstats::{
    map_paths, orthogonality_test, OrthogonalityReport, ReductionMode, ReportSet, RngSeed,
    StatsError, TestFunctionFamily, ThresholdPolicy,
};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("grid does not match the bridge: {0}")]
    GridMismatch(String),
    #[error("both densities below 1e-300; sample must be discarded")]
    NumericalUnderflow,
    #[error("degenerate importance weights: effective sample size {ess:.1} < {min}")]
    DegenerateWeights { ess: f64, min: f64 },
    #[error("pin density is zero: φ_T(y - x) = {0}")]
    ZeroPinDensity(f64),
}

/// A bridge target: base process pinned to `y` at time `t_end`, started at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub base: ProcessSpec,
    pub t_end: f64,
    pub x: f64,
    pub y: f64,
}

impl BridgeSpec {
    pub fn new(base: ProcessSpec, t_end: f64, x: f64, y: f64) -> Result<Self, BridgeError> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(BridgeError::GridMismatch(format!(
                "terminal time must be positive, got {t_end}"
            )));
        }
        Ok(Self { base, t_end, x, y })
    }
}

fn check_bridge_grid(grid: &TimeGrid, t_end: f64) -> Result<(), BridgeError> {
    if grid.t0() != 0.0 {
        return Err(BridgeError::GridMismatch(format!(
            "bridge grids start at 0, got t0 = {}",
            grid.t0()
        )));
    }
    let idx = grid.index_of(t_end)?;
    if idx != grid.steps() {
        return Err(BridgeError::GridMismatch(format!(
            "grid horizon {} does not equal the terminal time {t_end}",
            grid.horizon()
        )));
    }
    Ok(())
}

/// Exact Brownian bridge realization on the grid. Start and pin are hit
/// exactly; interior marginals are exact (no discretization error).
pub fn brownian_bridge_path(
    x: f64,
    y: f64,
    t_end: f64,
    grid: &TimeGrid,
    seed: RngSeed,
    path_index: u64,
) -> Result<SamplePath, BridgeError> {
    check_bridge_grid(grid, t_end)?;
    let free = sample_path(&ProcessSpec::standard_brownian(), grid, 0.0, seed, path_index);
    let b_end = *free.values.last().expect("non-empty path");
    let mut values = Vec::with_capacity(grid.len());
    for (i, &b) in free.values.iter().enumerate() {
        let r = grid.node(i) / t_end;
        values.push(x + (b - r * b_end) + r * (y - x));
    }
    values[0] = x;
    let last = values.len() - 1;
    values[last] = y;
    Ok(SamplePath { grid: grid.clone(), values, seed, path_index, jumps: Vec::new() })
}

/// Explicit-Euler path of the bridge SDE with unit diffusion. The final node
/// is set to the pin directly; the exact solution pins almost surely and any
/// quadrature at the singular endpoint is noise.
pub fn bridge_sde_path(
    x: f64,
    y: f64,
    t_end: f64,
    grid: &TimeGrid,
    seed: RngSeed,
    path_index: u64,
) -> Result<SamplePath, BridgeError> {
    bridge_sde_path_with_var(x, y, t_end, 1.0, grid, seed, path_index)
}

/// Bridge SDE path with an explicit diffusion variance (0 gives the
/// deterministic drift flow, used by tests).
pub fn bridge_sde_path_with_var(
    x: f64,
    y: f64,
    t_end: f64,
    var: f64,
    grid: &TimeGrid,
    seed: RngSeed,
    path_index: u64,
) -> Result<SamplePath, BridgeError> {
    check_bridge_grid(grid, t_end)?;
    if !grid.steps().is_power_of_two() {
        return Err(BridgeError::GridMismatch(format!(
            "bridge SDE step count must be a power of two so refinement studies halve cleanly, got {}",
            grid.steps()
        )));
    }
    let mut rng = seed.path_rng(path_index);
    let dt = grid.step();
    let noise_sd = (var * dt).sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut current = x;
    values.push(current);
    for i in 0..grid.steps() {
        if i == grid.steps() - 1 {
            values.push(y);
            break;
        }
        let drift = (y - current) / (t_end - grid.node(i)) * dt;
        let noise = if noise_sd > 0.0 {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            noise_sd * z
        } else {
            0.0
        };
        current += drift + noise;
        values.push(current);
    }
    Ok(SamplePath { grid: grid.clone(), values, seed, path_index, jumps: Vec::new() })
}

/// Left-endpoint Riemann sum of `∫₀ᵗ (ξ_T - ξ_s)/(T - s) ds` at every node
/// `t ≤ T`. The last summand uses `s = T - step`, where the integrand is
/// finite.
pub fn compensator_integral(path: &SamplePath, t_end: f64) -> Result<Vec<f64>, BridgeError> {
    let end = path.grid.index_of(t_end)?;
    let xi_end = path.values[end];
    let dt = path.grid.step();
    let mut out = Vec::with_capacity(end + 1);
    let mut acc = 0.0;
    out.push(acc);
    for j in 0..end {
        acc += (xi_end - path.values[j]) / (t_end - path.grid.node(j)) * dt;
        out.push(acc);
    }
    Ok(out)
}

/// A path split into its extracted martingale and the compensator, on the
/// grid restricted to `[0, t_end]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposedPath {
    pub path: SamplePath,
    pub compensator: Vec<f64>,
    pub martingale: Vec<f64>,
    pub end_index: usize,
}

impl DecomposedPath {
    /// The decomposition identity in its exactly-checkable form: the stored
    /// martingale must equal `value - compensator` bit for bit at every node.
    pub fn reconstructs_exactly(&self) -> bool {
        (0..=self.end_index).all(|j| {
            (self.path.values[j] - self.compensator[j]).to_bits() == self.martingale[j].to_bits()
        })
    }

    /// CSV export with columns `t,xi,compensator,martingale`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,xi,compensator,martingale\n");
        for j in 0..=self.end_index {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.path.grid.node(j),
                self.path.values[j],
                self.compensator[j],
                self.martingale[j]
            ));
        }
        out
    }
}

/// Extract the enlarged-filtration martingale `M_t = ξ_t - ∫₀ᵗ (ξ_T - ξ_s)/(T - s) ds`.
pub fn decompose(path: &SamplePath, t_end: f64) -> Result<DecomposedPath, BridgeError> {
    let compensator = compensator_integral(path, t_end)?;
    let end_index = compensator.len() - 1;
    let martingale: Vec<f64> =
        (0..=end_index).map(|j| path.values[j] - compensator[j]).collect();
    Ok(DecomposedPath { path: path.clone(), compensator, martingale, end_index })
}

/// Density source for bridge weights: exact closed forms where available,
/// Fourier grids otherwise (built once per needed time).
#[derive(Debug, Clone)]
pub enum BridgeDensity {
    Closed(ClosedFormFamily),
    Grids(BTreeMap<u64, DensityGrid>),
}

impl BridgeDensity {
    /// Build a source for the given route, preparing grids for every time in
    /// `times` when inversion is required.
    pub fn prepare(
        spec: &ProcessSpec,
        route: &DensityRoute,
        times: &[f64],
    ) -> Result<Self, BridgeError> {
        match *route {
            DensityRoute::ClosedForm => Ok(Self::Closed(ClosedFormFamily::from_spec(spec)?)),
            DensityRoute::Fourier { x_halfwidth, n_points } => {
                let opts = FourierOptions { x_halfwidth, n_points, ..Default::default() };
                let mut grids = BTreeMap::new();
                for &u in times {
                    grids.insert(u.to_bits(), density_fourier_with(spec, u, &opts)?);
                }
                Ok(Self::Grids(grids))
            }
        }
    }

    /// φ_u evaluated at `x`.
    pub fn pdf(&self, u: f64, x: f64) -> Result<f64, BridgeError> {
        match self {
            Self::Closed(family) => Ok(family.pdf(u, x)),
            Self::Grids(grids) => grids.get(&u.to_bits()).map(|g| g.eval(x)).ok_or_else(|| {
                BridgeError::Density(DensityError::InvalidGrid(format!(
                    "no prepared density grid for time {u}"
                )))
            }),
        }
    }
}

/// A path functional together with its Radon–Nikodym bridge weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub value: f64,
    pub weight: f64,
}

impl WeightedSample {
    pub fn new(value: f64, weight: f64) -> Result<Self, BridgeError> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(BridgeError::GridMismatch(format!(
                "weight must be finite and nonnegative, got {weight}"
            )));
        }
        Ok(Self { value, weight })
    }
}

const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Radon–Nikodym bridge weight `φ_{T-s}(y - ξ_s) / φ_T(y - x)` for one path.
pub fn bridge_weight(
    path: &SamplePath,
    s: f64,
    t_end: f64,
    y: f64,
    density: &BridgeDensity,
) -> Result<f64, BridgeError> {
    path.grid.index_of(t_end)?;
    let x = path.values[0];
    let num = density.pdf(t_end - s, y - path.value_at(s)?)?;
    let den = density.pdf(t_end, y - x)?;
    if num < UNDERFLOW_FLOOR && den < UNDERFLOW_FLOOR {
        return Err(BridgeError::NumericalUnderflow);
    }
    if den <= 0.0 {
        return Err(BridgeError::ZeroPinDensity(den));
    }
    let w = num / den;
    debug_assert!(w.is_finite() && w >= 0.0);
    Ok(w)
}

/// Self-normalized importance-sampling estimate of a bridge expectation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub ess: f64,
    pub n: usize,
    pub discarded: usize,
}

/// Estimate `E[g(ξ_t) | ξ_0 = x, ξ_T = y]` by weighting free increments.
/// Only the marginal at `t` enters the weight, so `ξ_t` is drawn as a single
/// exact increment of length `t`. Self-normalization cancels the density-grid
/// normalization error in the ratio; the standard error comes from the delta
/// method.
#[allow(clippy::too_many_arguments)]
pub fn bridge_expectation<F>(
    spec: &ProcessSpec,
    t_end: f64,
    x: f64,
    y: f64,
    t: f64,
    g: F,
    n_paths: usize,
    seed: RngSeed,
    density: &BridgeDensity,
    mode: ReductionMode,
) -> Result<BridgeEstimate, BridgeError>
where
    F: Fn(f64) -> f64 + Sync,
{
    if !(t > 0.0 && t < t_end) {
        return Err(BridgeError::GridMismatch(format!(
            "evaluation time must satisfy 0 < t < T, got t={t}, T={t_end}"
        )));
    }
    let den = density.pdf(t_end, y - x)?;
    if den <= 0.0 {
        return Err(BridgeError::ZeroPinDensity(den));
    }

    let draws = map_paths(n_paths, seed, mode, |_, rng| x + spec.sample_increment(t, rng));

    let mut sum_w = 0.0;
    let mut sum_wg = 0.0;
    let mut kept: Vec<WeightedSample> = Vec::with_capacity(n_paths);
    let mut discarded = 0usize;
    for xi_t in draws {
        let num = density.pdf(t_end - t, y - xi_t)?;
        if num < UNDERFLOW_FLOOR && den < UNDERFLOW_FLOOR {
            discarded += 1;
            continue;
        }
        let sample = WeightedSample::new(g(xi_t), num / den)?;
        sum_w += sample.weight;
        sum_wg += sample.weight * sample.value;
        kept.push(sample);
    }
    if sum_w <= 0.0 {
        return Err(BridgeError::DegenerateWeights { ess: 0.0, min: 100.0 });
    }
    let estimate = sum_wg / sum_w;
    let mut sum_w2 = 0.0;
    let mut sum_dev = 0.0;
    for sample in &kept {
        sum_w2 += sample.weight * sample.weight;
        let d = sample.weight * (sample.value - estimate);
        sum_dev += d * d;
    }
    let ess = sum_w * sum_w / sum_w2;
    if ess < 100.0 {
        return Err(BridgeError::DegenerateWeights { ess, min: 100.0 });
    }
    Ok(BridgeEstimate { estimate, stderr: sum_dev.sqrt() / sum_w, ess, n: kept.len(), discarded })
}

/// Configuration of the decomposition-martingale orthogonality suite:
/// `E[(M_t - M_s) · g(ξ_{s/2}, ξ_s, ξ_T)] = 0` for each `(s, t)` pair. The
/// strictly-past coordinate `s/2` keeps the tested σ-field honest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionTestConfig {
    pub pairs: Vec<(f64, f64)>,
    pub t_end: f64,
    pub steps: usize,
    pub n_paths: usize,
    pub threshold: ThresholdPolicy,
    pub mode: ReductionMode,
}

pub fn decomposition_martingale_test(
    spec: &ProcessSpec,
    config: &DecompositionTestConfig,
    seed: RngSeed,
) -> Result<ReportSet, BridgeError> {
    let grid = TimeGrid::new(0.0, config.t_end, config.steps)?;
    let mut idx = Vec::new();
    for &(s, t) in &config.pairs {
        if !(s < t && t < config.t_end) {
            return Err(BridgeError::GridMismatch(format!(
                "need s < t < T, got ({s}, {t}) with T={}",
                config.t_end
            )));
        }
        idx.push((grid.index_of(s / 2.0)?, grid.index_of(s)?, grid.index_of(t)?));
    }
    let end = grid.index_of(config.t_end)?;
    let pairs = &config.pairs;
    let idx = &idx;

    let simulate = move |i: u64, rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let path = crate::levy::sample_path_with_rng(spec, &grid, 0.0, seed, i, rng);
        let dec = decompose(&path, config.t_end).expect("grid validated");
        let mut row = Vec::with_capacity(pairs.len() * 4);
        for &(ih, is, it) in idx {
            row.push(dec.martingale[it] - dec.martingale[is]);
            row.push(path.values[ih]);
            row.push(path.values[is]);
            row.push(path.values[end]);
        }
        row
    };

    // Pilot run freezes the test-function standardization before the main run.
    let pilot_seed = seed.child(0x706c_6f74);
    let pilot = map_paths(10_000, pilot_seed, config.mode, &simulate);
    let main = map_paths(config.n_paths, seed, config.mode, &simulate);

    let fam0 = TestFunctionFamily::standardized(&columns(&pilot, 0, 3));
    let threshold = config.threshold.threshold(fam0.len() * config.pairs.len());

    let mut reports: Vec<OrthogonalityReport> = Vec::new();
    for (k, &(s, t)) in config.pairs.iter().enumerate() {
        let base = k * 4;
        let fam = TestFunctionFamily::standardized(&columns(&pilot, base, 3));
        let x: Vec<f64> = main.iter().map(|row| row[base]).collect();
        let z = columns(&main, base, 3);
        let label = format!("martingale (s={s}, t={t})");
        reports.extend(orthogonality_test(&label, &x, &z, &fam, threshold, 0)?);
    }
    Ok(ReportSet::new("decomposition martingale", reports))
}

/// Extract `n_cols` conditioning columns following position `base` (the
/// tested statistic) in each row.
fn columns(rows: &[Vec<f64>], base: usize, n_cols: usize) -> Vec<Vec<f64>> {
    (1..=n_cols)
        .map(|c| rows.iter().map(|row| row[base + c]).collect())
        .collect()
}
