//! Harness functionals and their statistical verification.
//!
//! A process is a harness when the conditional expectation of `H_t` given the
//! path outside `(s, u)` is the affine interpolation of `H_s` and `H_u`;
//! equivalently, difference quotients over nested intervals form a projective
//! family. Integrable Lévy processes are harnesses, which this module turns
//! into testable statements three ways:
//!
//! * interpolation residuals `H_t - [(t-s)/(u-s)]H_u - [(u-t)/(u-s)]H_s`
//!   orthogonal to bounded functions of past-and-future coordinates,
//! * the forward martingale `M_t = H_t - ∫₀ᵗ (H_T - H_u)/(T - u) du` and its
//!   reverse-time counterpart `N_t = H_t + ∫_t^T (H_τ - H_s)/(τ - s) ds`,
//! * the difference-quotient projection
//!   `E[(H_t - H_s)/(t - s) | past ≤ s, future ≥ T] = (H_T - H_s)/(T - s)`.
//!
//! Conditioning coordinates always include a strictly-past point (`s/2`) and
//! a strictly-future point (`horizon_factor · u`), so the tested σ-field is
//! genuinely past-and-future, not just the two pin values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridges::{decompose, BridgeError};
use crate::levy::{sample_path_with_rng, LevyError, ProcessSpec, SamplePath, TimeGrid};
use crate::mcstats::{
    map_paths, orthogonality_test, OrthogonalityReport, ReductionMode, ReportSet, RngSeed,
    StatsError, TestFunctionFamily, ThresholdPolicy,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("invalid times: {0}")]
    InvalidTimes(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Affine-interpolation residual at `(s, t, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnessResidual {
    pub s: f64,
    pub t: f64,
    pub u: f64,
    pub value: f64,
}

/// Difference-quotient residual at `(a, b, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeResidual {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub value: f64,
}

fn require_increasing(times: &[f64]) -> Result<(), HarnessError> {
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::InvalidTimes(format!(
            "times must be strictly increasing, got {times:?}"
        )));
    }
    Ok(())
}

/// `H_t - [(t-s)/(u-s)]H_u - [(u-t)/(u-s)]H_s`; zero in expectation given
/// the path outside `(s, u)` when `H` is a harness, and identically zero on
/// affine paths.
pub fn harness_residual(
    path: &SamplePath,
    s: f64,
    t: f64,
    u: f64,
) -> Result<HarnessResidual, HarnessError> {
    require_increasing(&[s, t, u])?;
    let h_s = path.value_at(s)?;
    let h_t = path.value_at(t)?;
    let h_u = path.value_at(u)?;
    let value = h_t - (t - s) / (u - s) * h_u - (u - t) / (u - s) * h_s;
    Ok(HarnessResidual { s, t, u, value })
}

/// `(H_c - H_b)/(c - b) - (H_d - H_a)/(d - a)`.
pub fn slope_residual(
    path: &SamplePath,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
) -> Result<SlopeResidual, HarnessError> {
    require_increasing(&[a, b, c, d])?;
    let inner = difference_quotient(path, b, c)?;
    let outer = difference_quotient(path, a, d)?;
    Ok(SlopeResidual { a, b, c, d, value: inner - outer })
}

/// `(H_t - H_s)/(t - s)` from node values.
pub fn difference_quotient(path: &SamplePath, s: f64, t: f64) -> Result<f64, HarnessError> {
    require_increasing(&[s, t])?;
    Ok((path.value_at(t)? - path.value_at(s)?) / (t - s))
}

/// Forward extraction `M_t = H_t - ∫₀ᵗ (H_T - H_u)/(T - u) du`; shared with
/// the bridge decomposition.
pub fn martingale_from_harness(path: &SamplePath, t_end: f64) -> Result<Vec<f64>, HarnessError> {
    Ok(decompose(path, t_end)?.martingale)
}

/// Reverse-time extraction `N_t = H_t + ∫_t^T (H_τ - H_s)/(τ - s) ds` for
/// `τ < t ≤ T`, right-endpoint sums (the integrand is evaluated at node
/// right endpoints, away from the singular endpoint `s = τ`). Element `k` of
/// the result belongs to grid node `index_of(τ) + 1 + k`; the last element
/// equals `H_T` exactly.
pub fn reverse_martingale_from_harness(
    path: &SamplePath,
    tau: f64,
    t_end: f64,
) -> Result<Vec<f64>, HarnessError> {
    require_increasing(&[tau, t_end])?;
    let i_tau = path.grid.index_of(tau)?;
    let i_end = path.grid.index_of(t_end)?;
    let h_tau = path.values[i_tau];
    let dt = path.grid.step();
    let mut out = vec![0.0; i_end - i_tau];
    let mut tail = 0.0;
    for j in (i_tau + 1..=i_end).rev() {
        out[j - i_tau - 1] = path.values[j] + tail;
        tail += (h_tau - path.values[j]) / (tau - path.grid.node(j)) * dt;
    }
    Ok(out)
}

/// Configuration of the harness orthogonality suite. Triples test the
/// interpolation form, quads the slope form; the grid spans
/// `[0, horizon_factor · max(u, d)]` so future coordinates exist.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HarnessSuiteConfig {
    pub triples: Vec<(f64, f64, f64)>,
    #[serde(default)]
    pub quads: Vec<(f64, f64, f64, f64)>,
    pub n_paths: usize,
    pub steps: usize,
    pub horizon_factor: f64,
    pub threshold: ThresholdPolicy,
    /// Control distortion: adds `bias · (u - s)` to `H_t` in every triple
    /// residual. A correct suite must detect it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_bias: Option<f64>,
    pub mode: ReductionMode,
}

impl HarnessSuiteConfig {
    pub fn defaults(n_paths: usize) -> Self {
        Self {
            triples: vec![(0.25, 0.5, 0.75), (0.1, 0.5, 0.9), (0.25, 0.3, 0.9)],
            quads: Vec::new(),
            n_paths,
            steps: 72,
            horizon_factor: 2.0,
            threshold: ThresholdPolicy::Bonferroni { alpha: 0.01 },
            planted_bias: None,
            mode: ReductionMode::Parallel,
        }
    }
}

/// Run the harness suite for one spec: per triple and quad, every bounded
/// test function of `(H_{s/2}, H_s, H_u, H_{hf·u})` must be orthogonal to the
/// residual.
pub fn harness_test(
    spec: &ProcessSpec,
    config: &HarnessSuiteConfig,
    seed: RngSeed,
) -> Result<ReportSet, HarnessError> {
    let mut max_time: f64 = 0.0;
    for &(s, t, u) in &config.triples {
        require_increasing(&[s, t, u])?;
        max_time = max_time.max(u);
    }
    for &(a, b, c, d) in &config.quads {
        require_increasing(&[a, b, c, d])?;
        max_time = max_time.max(d);
    }
    if max_time <= 0.0 {
        return Err(HarnessError::InvalidTimes("no triples or quads given".to_string()));
    }
    let horizon = config.horizon_factor * max_time;
    let grid = TimeGrid::new(0.0, horizon, config.steps)?;

    // (statistic index tuple, conditioning index tuple) per tested time set.
    struct Block {
        label: String,
        stat: StatKind,
        cond: [usize; 4],
    }
    enum StatKind {
        Triple { is: usize, it: usize, iu: usize, span: f64 },
        Quad { ia: usize, ib: usize, ic: usize, id: usize },
    }

    let mut blocks = Vec::new();
    for &(s, t, u) in &config.triples {
        blocks.push(Block {
            label: format!("harness ({s},{t},{u})"),
            stat: StatKind::Triple {
                is: grid.index_of(s)?,
                it: grid.index_of(t)?,
                iu: grid.index_of(u)?,
                span: u - s,
            },
            cond: [
                grid.index_of(s / 2.0)?,
                grid.index_of(s)?,
                grid.index_of(u)?,
                grid.index_of(config.horizon_factor * u)?,
            ],
        });
    }
    for &(a, b, c, d) in &config.quads {
        blocks.push(Block {
            label: format!("slope ({a},{b},{c},{d})"),
            stat: StatKind::Quad {
                ia: grid.index_of(a)?,
                ib: grid.index_of(b)?,
                ic: grid.index_of(c)?,
                id: grid.index_of(d)?,
            },
            cond: [
                grid.index_of(a / 2.0)?,
                grid.index_of(a)?,
                grid.index_of(d)?,
                grid.index_of(config.horizon_factor * d)?,
            ],
        });
    }

    let bias = config.planted_bias;
    let blocks = &blocks;
    let grid_ref = &grid;
    let simulate = move |i: u64, rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let path = sample_path_with_rng(spec, grid_ref, 0.0, seed, i, rng);
        let v = &path.values;
        let mut row = Vec::with_capacity(blocks.len() * 5);
        for block in blocks {
            let x = match block.stat {
                StatKind::Triple { is, it, iu, span } => {
                    let (s, t, u) =
                        (grid_ref.node(is), grid_ref.node(it), grid_ref.node(iu));
                    let h_t = v[it] + bias.map_or(0.0, |eps| eps * span);
                    h_t - (t - s) / (u - s) * v[iu] - (u - t) / (u - s) * v[is]
                }
                StatKind::Quad { ia, ib, ic, id } => {
                    let (a, b, c, d) = (
                        grid_ref.node(ia),
                        grid_ref.node(ib),
                        grid_ref.node(ic),
                        grid_ref.node(id),
                    );
                    (v[ic] - v[ib]) / (c - b) - (v[id] - v[ia]) / (d - a)
                }
            };
            row.push(x);
            for &ci in &block.cond {
                row.push(v[ci]);
            }
        }
        row
    };

    let pilot = map_paths(10_000, seed.child(0x706c_6f74), config.mode, simulate);
    let main = map_paths(config.n_paths, seed, config.mode, simulate);

    let fam0 = TestFunctionFamily::standardized(&columns(&pilot, 0, 4));
    let threshold = config.threshold.threshold(fam0.len() * blocks.len());

    let mut reports: Vec<OrthogonalityReport> = Vec::new();
    for (k, block) in blocks.iter().enumerate() {
        let base = k * 5;
        let fam = TestFunctionFamily::standardized(&columns(&pilot, base, 4));
        let x: Vec<f64> = main.iter().map(|row| row[base]).collect();
        let z = columns(&main, base, 4);
        reports.extend(orthogonality_test(&block.label, &x, &z, &fam, threshold, 0)?);
    }
    Ok(ReportSet::new("harness", reports))
}

/// Reverse-time martingale suite: `E[(N_t - N_{t'}) · g] = 0` for
/// `τ < t < t' ≤ T` against bounded functions of
/// `(H_{τ/2}, H_τ, H_{t'}, H_{hf·T})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReverseMartingaleConfig {
    pub tau: f64,
    pub t_end: f64,
    /// Pairs `(t, t')` with `τ < t < t' ≤ T`.
    pub pairs: Vec<(f64, f64)>,
    pub n_paths: usize,
    pub steps: usize,
    pub horizon_factor: f64,
    pub threshold: ThresholdPolicy,
    pub mode: ReductionMode,
}

pub fn reverse_martingale_test(
    spec: &ProcessSpec,
    config: &ReverseMartingaleConfig,
    seed: RngSeed,
) -> Result<ReportSet, HarnessError> {
    require_increasing(&[config.tau, config.t_end])?;
    let horizon = config.horizon_factor * config.t_end;
    let grid = TimeGrid::new(0.0, horizon, config.steps)?;
    let i_tau = grid.index_of(config.tau)?;
    let cond = [
        grid.index_of(config.tau / 2.0)?,
        i_tau,
        0usize, // filled per pair below
        grid.index_of(horizon)?,
    ];
    let mut pair_idx = Vec::new();
    for &(t, tp) in &config.pairs {
        if !(config.tau < t && t < tp && tp <= config.t_end) {
            return Err(HarnessError::InvalidTimes(format!(
                "need τ < t < t' ≤ T, got ({t}, {tp})"
            )));
        }
        pair_idx.push((grid.index_of(t)?, grid.index_of(tp)?));
    }
    let pair_idx = &pair_idx;
    let grid_ref = &grid;

    let simulate = move |i: u64, rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let path = sample_path_with_rng(spec, grid_ref, 0.0, seed, i, rng);
        let rev = reverse_martingale_from_harness(&path, config.tau, config.t_end)
            .expect("validated times");
        let v = &path.values;
        let mut row = Vec::with_capacity(pair_idx.len() * 5);
        for &(it, itp) in pair_idx {
            row.push(rev[it - i_tau - 1] - rev[itp - i_tau - 1]);
            row.push(v[cond[0]]);
            row.push(v[cond[1]]);
            row.push(v[itp]);
            row.push(v[cond[3]]);
        }
        row
    };

    let pilot = map_paths(10_000, seed.child(0x706c_6f74), config.mode, simulate);
    let main = map_paths(config.n_paths, seed, config.mode, simulate);

    let fam0 = TestFunctionFamily::standardized(&columns(&pilot, 0, 4));
    let threshold = config.threshold.threshold(fam0.len() * config.pairs.len());

    let mut reports: Vec<OrthogonalityReport> = Vec::new();
    for (k, &(t, tp)) in config.pairs.iter().enumerate() {
        let base = k * 5;
        let fam = TestFunctionFamily::standardized(&columns(&pilot, base, 4));
        let x: Vec<f64> = main.iter().map(|row| row[base]).collect();
        let z = columns(&main, base, 4);
        let label = format!("reverse martingale (t={t}, t'={tp})");
        reports.extend(orthogonality_test(&label, &x, &z, &fam, threshold, 0)?);
    }
    Ok(ReportSet::new("reverse martingale", reports))
}

/// Difference-quotient projection suite:
/// `E[((H_t - H_s)/(t-s) - (H_T - H_s)/(T-s)) · g(H_{s/2}, H_s, H_T, H_{hf·T})] = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientProjectionConfig {
    /// Triples `(s, t, T)` with `s < t < T`.
    pub triples: Vec<(f64, f64, f64)>,
    pub n_paths: usize,
    pub steps: usize,
    pub horizon_factor: f64,
    pub threshold: ThresholdPolicy,
    pub mode: ReductionMode,
}

pub fn quotient_projection_test(
    spec: &ProcessSpec,
    config: &QuotientProjectionConfig,
    seed: RngSeed,
) -> Result<ReportSet, HarnessError> {
    let mut max_t: f64 = 0.0;
    for &(s, t, t_end) in &config.triples {
        require_increasing(&[s, t, t_end])?;
        max_t = max_t.max(t_end);
    }
    let horizon = config.horizon_factor * max_t;
    let grid = TimeGrid::new(0.0, horizon, config.steps)?;
    let mut idx = Vec::new();
    for &(s, t, t_end) in &config.triples {
        idx.push((
            grid.index_of(s / 2.0)?,
            grid.index_of(s)?,
            grid.index_of(t)?,
            grid.index_of(t_end)?,
            grid.index_of(config.horizon_factor * t_end)?,
        ));
    }
    let idx = &idx;
    let grid_ref = &grid;
    let triples = &config.triples;

    let simulate = move |i: u64, rng: &mut rand_chacha::ChaCha12Rng| -> Vec<f64> {
        let path = sample_path_with_rng(spec, grid_ref, 0.0, seed, i, rng);
        let v = &path.values;
        let mut row = Vec::with_capacity(triples.len() * 5);
        for (k, &(s, t, t_end)) in triples.iter().enumerate() {
            let (ih, is, it, ie, if_) = idx[k];
            row.push((v[it] - v[is]) / (t - s) - (v[ie] - v[is]) / (t_end - s));
            row.push(v[ih]);
            row.push(v[is]);
            row.push(v[ie]);
            row.push(v[if_]);
        }
        row
    };

    let pilot = map_paths(10_000, seed.child(0x706c_6f74), config.mode, simulate);
    let main = map_paths(config.n_paths, seed, config.mode, simulate);

    let fam0 = TestFunctionFamily::standardized(&columns(&pilot, 0, 4));
    let threshold = config.threshold.threshold(fam0.len() * config.triples.len());

    let mut reports: Vec<OrthogonalityReport> = Vec::new();
    for (k, &(s, t, t_end)) in config.triples.iter().enumerate() {
        let base = k * 5;
        let fam = TestFunctionFamily::standardized(&columns(&pilot, base, 4));
        let x: Vec<f64> = main.iter().map(|row| row[base]).collect();
        let z = columns(&main, base, 4);
        let label = format!("quotient projection (s={s}, t={t}, T={t_end})");
        reports.extend(orthogonality_test(&label, &x, &z, &fam, threshold, 0)?);
    }
    Ok(ReportSet::new("quotient projection", reports))
}

/// One retained cell of the binned conditional-mean cross-check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BinCell {
    pub row: usize,
    pub col: usize,
    pub n: usize,
    pub mean_deviation: f64,
    pub stderr: f64,
    pub z: f64,
}

/// Nonparametric check of `E[H_t | H_s, H_u]` against the affine prediction
/// by 2-D equal-frequency binning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalMeanReport {
    pub bins: usize,
    pub retained: usize,
    pub dropped: usize,
    pub max_abs_z: f64,
    pub cells: Vec<BinCell>,
    pub pass: bool,
}

const BIN_OCCUPANCY_FLOOR: usize = 50;

/// Column-based worker for [`conditional_mean_estimate`].
pub fn conditional_mean_from_columns(
    h_s: &[f64],
    h_t: &[f64],
    h_u: &[f64],
    s: f64,
    t: f64,
    u: f64,
    bins: usize,
) -> Result<ConditionalMeanReport, HarnessError> {
    require_increasing(&[s, t, u])?;
    let n = h_s.len();
    if n != h_t.len() || n != h_u.len() {
        return Err(HarnessError::InvalidTimes("column lengths differ".to_string()));
    }
    if n < bins * bins * BIN_OCCUPANCY_FLOOR / 4 {
        return Err(HarnessError::InsufficientData(format!(
            "{n} samples for {bins}x{bins} bins"
        )));
    }
    let edges = |col: &[f64]| -> Vec<f64> {
        let mut sorted = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        (1..bins).map(|k| sorted[k * n / bins]).collect()
    };
    let edges_s = edges(h_s);
    let edges_u = edges(h_u);
    let locate = |edges: &[f64], v: f64| edges.partition_point(|&e| e <= v);

    let w_u = (t - s) / (u - s);
    let w_s = (u - t) / (u - s);
    let mut count = vec![0usize; bins * bins];
    let mut sum = vec![0.0f64; bins * bins];
    let mut sumsq = vec![0.0f64; bins * bins];
    for i in 0..n {
        let cell = locate(&edges_s, h_s[i]) * bins + locate(&edges_u, h_u[i]);
        let dev = h_t[i] - (w_u * h_u[i] + w_s * h_s[i]);
        count[cell] += 1;
        sum[cell] += dev;
        sumsq[cell] += dev * dev;
    }

    let mut cells = Vec::new();
    let mut dropped = 0usize;
    let mut max_abs_z = 0.0f64;
    for r in 0..bins {
        for c in 0..bins {
            let k = r * bins + c;
            if count[k] < BIN_OCCUPANCY_FLOOR {
                dropped += 1;
                continue;
            }
            let m = count[k] as f64;
            let mean = sum[k] / m;
            let var = (sumsq[k] - m * mean * mean).max(0.0) / (m - 1.0);
            let stderr = (var / m).sqrt();
            let z = if stderr > 0.0 {
                mean / stderr
            } else if mean == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            max_abs_z = max_abs_z.max(z.abs());
            cells.push(BinCell { row: r, col: c, n: count[k], mean_deviation: mean, stderr, z });
        }
    }
    if cells.is_empty() {
        return Err(HarnessError::InsufficientData(
            "no bin reached the occupancy floor".to_string(),
        ));
    }
    Ok(ConditionalMeanReport {
        bins,
        retained: cells.len(),
        dropped,
        max_abs_z,
        pass: max_abs_z <= 4.0,
        cells,
    })
}

/// Binned conditional-mean cross-check straight from sampled paths.
pub fn conditional_mean_estimate(
    paths: &[SamplePath],
    s: f64,
    t: f64,
    u: f64,
    bins: usize,
) -> Result<ConditionalMeanReport, HarnessError> {
    let mut h_s = Vec::with_capacity(paths.len());
    let mut h_t = Vec::with_capacity(paths.len());
    let mut h_u = Vec::with_capacity(paths.len());
    for p in paths {
        h_s.push(p.value_at(s)?);
        h_t.push(p.value_at(t)?);
        h_u.push(p.value_at(u)?);
    }
    conditional_mean_from_columns(&h_s, &h_t, &h_u, s, t, u, bins)
}

fn columns(rows: &[Vec<f64>], base: usize, n_cols: usize) -> Vec<Vec<f64>> {
    (1..=n_cols)
        .map(|c| rows.iter().map(|row| row[base + c]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{sample_path, JumpLaw, JumpSpec};

    fn affine_path(alpha: f64, beta: f64, grid: &TimeGrid) -> SamplePath {
        SamplePath {
            grid: grid.clone(),
            values: (0..grid.len()).map(|i| alpha + beta * grid.node(i)).collect(),
            seed: RngSeed::new(0),
            path_index: 0,
            jumps: Vec::new(),
        }
    }

    #[test]
    fn affine_paths_have_zero_residuals() {
        let grid = TimeGrid::new(0.0, 2.0, 64).unwrap();
        let path = affine_path(0.7, -1.3, &grid);
        let r = harness_residual(&path, 0.25, 0.5, 1.0).unwrap();
        assert!(r.value.abs() <= 1e-12, "residual {}", r.value);
        let sr = slope_residual(&path, 0.25, 0.5, 1.0, 1.5).unwrap();
        assert!(sr.value.abs() <= 1e-12, "slope residual {}", sr.value);
    }

    #[test]
    fn residual_arithmetic_examples() {
        let grid = TimeGrid::new(0.0, 3.0, 3).unwrap();
        let path = SamplePath {
            grid,
            values: vec![0.0, 3.0, 4.0, 6.0],
            seed: RngSeed::new(0),
            path_index: 0,
            jumps: Vec::new(),
        };
        let r = harness_residual(&path, 0.0, 1.0, 2.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let sr = slope_residual(&path, 0.0, 1.0, 2.0, 3.0).unwrap();
        assert!((sr.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triples_are_rejected() {
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let path = affine_path(0.0, 1.0, &grid);
        assert!(harness_residual(&path, 0.5, 0.5, 0.8).is_err());
        assert!(slope_residual(&path, 0.1, 0.1, 0.5, 0.8).is_err());
    }

    /// Algebraic identity linking the two residual forms:
    /// `residual(s,t,u) = (t-s)(u-t)/(u-s) · [(H_t-H_s)/(t-s) - (H_u-H_t)/(u-t)]`.
    #[test]
    fn interpolation_and_slope_forms_agree_algebraically() {
        let spec = ProcessSpec::new(
            0.2,
            1.0,
            JumpSpec::CompoundPoisson { rate: 2.0, jump_law: JumpLaw::Normal { mean: 0.1, var: 0.6 } },
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 80).unwrap();
        for i in 0..200 {
            let path = sample_path(&spec, &grid, 0.5, RngSeed::new(17), i);
            for &(s, t, u) in &[(0.25, 0.5, 1.0), (0.1, 0.9, 1.5), (0.5, 0.525, 0.55)] {
                let r = harness_residual(&path, s, t, u).unwrap().value;
                let left = (path.value_at(t).unwrap() - path.value_at(s).unwrap()) / (t - s);
                let right = (path.value_at(u).unwrap() - path.value_at(t).unwrap()) / (u - t);
                let alt = (t - s) * (u - t) / (u - s) * (left - right);
                let scale = r.abs().max(alt.abs()).max(1e-30);
                assert!(
                    (r - alt).abs() / scale <= 1e-10,
                    "forms disagree: {r} vs {alt}"
                );
            }
        }
    }

    #[test]
    fn reverse_martingale_on_affine_path_is_constant() {
        let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let path = affine_path(0.0, 2.0, &grid);
        let rev = reverse_martingale_from_harness(&path, 0.25, 1.0).unwrap();
        // Affine case: N ≡ H_T, and the t = T entry is exact by construction.
        let h_end = *path.values.last().unwrap();
        assert_eq!(*rev.last().unwrap(), h_end);
        for &n in &rev {
            assert!((n - h_end).abs() <= 1e-10, "{n} vs {h_end}");
        }

        let forward = martingale_from_harness(&path, 1.0).unwrap();
        for &m in &forward {
            assert!((m - path.values[0]).abs() <= 1e-10);
        }
    }

    #[test]
    fn harness_suite_passes_for_brownian() {
        let mut config = HarnessSuiteConfig::defaults(30_000);
        config.quads = vec![(0.2, 0.4, 0.6, 0.8)];
        let set = harness_test(&ProcessSpec::standard_brownian(), &config, RngSeed::new(41)).unwrap();
        assert!(set.pass, "max |z| = {}", set.max_abs_z());
        assert_eq!(set.n_tests, 4 * 11);
    }

    #[test]
    fn zero_noise_spec_gives_all_zero_z() {
        let spec = ProcessSpec::new(0.0, 0.0, JumpSpec::None).unwrap();
        let config = HarnessSuiteConfig::defaults(2_000);
        let set = harness_test(&spec, &config, RngSeed::new(42)).unwrap();
        assert!(set.pass);
        for r in &set.reports {
            assert_eq!(r.z, 0.0);
        }
    }

    #[test]
    fn planted_bias_is_detected() {
        let mut config = HarnessSuiteConfig::defaults(30_000);
        config.planted_bias = Some(0.05);
        let set = harness_test(&ProcessSpec::standard_brownian(), &config, RngSeed::new(43)).unwrap();
        assert!(!set.pass, "planted bias went undetected");
    }

    #[test]
    fn reverse_martingale_suite_passes_for_brownian() {
        let config = ReverseMartingaleConfig {
            tau: 0.25,
            t_end: 1.0,
            pairs: vec![(0.5, 0.75), (0.5, 1.0)],
            n_paths: 30_000,
            steps: 32,
            horizon_factor: 2.0,
            threshold: ThresholdPolicy::Fixed(4.0),
            mode: ReductionMode::Parallel,
        };
        let set =
            reverse_martingale_test(&ProcessSpec::standard_brownian(), &config, RngSeed::new(44))
                .unwrap();
        assert!(set.pass, "max |z| = {}", set.max_abs_z());
    }

    #[test]
    fn quotient_projection_passes_for_centered_gamma() {
        let spec = ProcessSpec::new(0.0, 0.0, JumpSpec::GammaSubordinator { a: 1.0, b: 1.0 })
            .unwrap()
            .center();
        let config = QuotientProjectionConfig {
            triples: vec![(0.25, 0.5, 1.0)],
            n_paths: 30_000,
            steps: 32,
            horizon_factor: 2.0,
            threshold: ThresholdPolicy::Fixed(4.0),
            mode: ReductionMode::Parallel,
        };
        let set = quotient_projection_test(&spec, &config, RngSeed::new(45)).unwrap();
        assert!(set.pass, "max |z| = {}", set.max_abs_z());
    }

    #[test]
    fn conditional_mean_zero_deviation_on_affine_paths() {
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        // Affine paths with varying slopes: prediction is exact per path.
        let paths: Vec<SamplePath> = (0..3000)
            .map(|i| affine_path(0.0, i as f64 / 100.0, &grid))
            .collect();
        let report = conditional_mean_estimate(&paths, 0.25, 0.5, 0.75, 2).unwrap();
        assert!(report.pass);
        for cell in &report.cells {
            assert!(cell.mean_deviation.abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_mean_matches_for_brownian() {
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let seed = RngSeed::new(46);
        let spec = ProcessSpec::standard_brownian();
        let n = 100_000;
        let cols = map_paths(n, seed, ReductionMode::Parallel, |i, rng| {
            let p = sample_path_with_rng(&spec, &grid, 0.0, seed, i, rng);
            (p.value_at(0.25).unwrap(), p.value_at(0.5).unwrap(), p.value_at(0.75).unwrap())
        });
        let h_s: Vec<f64> = cols.iter().map(|c| c.0).collect();
        let h_t: Vec<f64> = cols.iter().map(|c| c.1).collect();
        let h_u: Vec<f64> = cols.iter().map(|c| c.2).collect();
        let report =
            conditional_mean_from_columns(&h_s, &h_t, &h_u, 0.25, 0.5, 0.75, 8).unwrap();
        assert!(report.pass, "max |z| = {}", report.max_abs_z);
        assert!(report.retained > 0);
    }

    #[test]
    fn conditional_mean_requires_enough_samples() {
        let err = conditional_mean_from_columns(&[0.0; 10], &[0.0; 10], &[0.0; 10], 0.1, 0.2, 0.3, 8);
        assert!(matches!(err, Err(HarnessError::InsufficientData(_))));
    }
}
