//! Piecewise-polynomial deterministic integrands, right-continuous with left
//! limits, compactly supported. Breakpoints are expected to sit on the
//! simulation grid; evaluation outside the support is zero.

use serde::{Deserialize, Serialize};

use super::PfmError;
use crate::levy::TimeGrid;

/// A piecewise polynomial: segment `k` covers `[breakpoints[k], breakpoints[k+1])`
/// with coefficients in ascending powers of `(t - breakpoints[k])`. The
/// function is zero outside `[first, last)` and has locally finite variation
/// by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFn")]
pub struct DeterministicFn {
    breakpoints: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFn {
    breakpoints: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

impl TryFrom<RawFn> for DeterministicFn {
    type Error = PfmError;

    fn try_from(raw: RawFn) -> Result<Self, Self::Error> {
        DeterministicFn::new(raw.breakpoints, raw.segments)
    }
}

impl DeterministicFn {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Vec<f64>>) -> Result<Self, PfmError> {
        if breakpoints.is_empty() && segments.is_empty() {
            return Ok(Self::zero());
        }
        if breakpoints.len() < 2 || segments.len() != breakpoints.len() - 1 {
            return Err(PfmError::InvalidFunction(format!(
                "{} breakpoints with {} segments",
                breakpoints.len(),
                segments.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PfmError::InvalidFunction(
                "breakpoints must be strictly increasing".to_string(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite())
            || segments.iter().flatten().any(|c| !c.is_finite())
        {
            return Err(PfmError::InvalidFunction("non-finite parameter".to_string()));
        }
        Ok(Self { breakpoints, segments })
    }

    /// The identically-zero function.
    pub fn zero() -> Self {
        Self { breakpoints: Vec::new(), segments: Vec::new() }
    }

    /// Constant `c` on `[from, to)`.
    pub fn constant(c: f64, from: f64, to: f64) -> Result<Self, PfmError> {
        Self::new(vec![from, to], vec![vec![c]])
    }

    /// Continuous piecewise-linear interpolation through the given points,
    /// zero outside their span.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self, PfmError> {
        if points.len() < 2 {
            return Err(PfmError::InvalidFunction("need at least two points".to_string()));
        }
        let breakpoints: Vec<f64> = points.iter().map(|p| p.0).collect();
        let segments = points
            .windows(2)
            .map(|w| {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                vec![w[0].1, slope]
            })
            .collect();
        Self::new(breakpoints, segments)
    }

    pub fn is_zero(&self) -> bool {
        self.segments.is_empty()
    }

    /// `(first, last)` of the support interval, `(0, 0)` for the zero
    /// function.
    pub fn support(&self) -> (f64, f64) {
        if self.is_zero() {
            (0.0, 0.0)
        } else {
            (self.breakpoints[0], *self.breakpoints.last().unwrap())
        }
    }

    fn segment_index(&self, t: f64) -> Option<usize> {
        if self.is_zero() || t < self.breakpoints[0] || t >= *self.breakpoints.last().unwrap() {
            return None;
        }
        Some(self.breakpoints.partition_point(|&b| b <= t) - 1)
    }

    fn horner(&self, seg: usize, t: f64) -> f64 {
        let dt = t - self.breakpoints[seg];
        self.segments[seg].iter().rev().fold(0.0, |acc, &c| acc * dt + c)
    }

    /// `f(t)` (right-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        match self.segment_index(t) {
            Some(k) => self.horner(k, t),
            None => 0.0,
        }
    }

    fn left_limit(&self, t: f64) -> f64 {
        let (first, last) = self.support();
        if t <= first || t > last {
            return 0.0;
        }
        if t == last {
            return self.horner(self.segments.len() - 1, t);
        }
        match self.breakpoints.iter().position(|&b| b == t) {
            // At an interior breakpoint the left limit comes from the
            // previous segment, extended to its right endpoint.
            Some(k) => self.horner(k - 1, t),
            None => self.eval(t),
        }
    }

    /// `f(t⁻)` under the integration convention: at the support's left edge
    /// the value `f(first)` is used, so that an integral started exactly at
    /// the edge counts its first step (the constant function integrates to
    /// `ξ_to - ξ_from` exactly). Elsewhere this is the true left limit.
    pub fn eval_left(&self, t: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if t == self.breakpoints[0] {
            return self.horner(0, t);
        }
        self.left_limit(t)
    }

    /// Jump times and sizes `Δf(b) = f(b) - f(b⁻)` with true left limits,
    /// including the support edges when the function does not vanish there.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        if self.is_zero() {
            return Vec::new();
        }
        self.breakpoints
            .iter()
            .filter_map(|&b| {
                let jump = self.eval(b) - self.left_limit(b);
                (jump != 0.0).then_some((b, jump))
            })
            .collect()
    }

    /// Analytic `∫_a^b f(v) dv`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if self.is_zero() || a >= b {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..self.segments.len() {
            let lo = self.breakpoints[k].max(a);
            let hi = self.breakpoints[k + 1].min(b);
            if lo >= hi {
                continue;
            }
            let base = self.breakpoints[k];
            let anti = |t: f64| -> f64 {
                let dt = t - base;
                self.segments[k]
                    .iter()
                    .enumerate()
                    .map(|(p, &c)| c * dt.powi(p as i32 + 1) / (p as f64 + 1.0))
                    .sum::<f64>()
            };
            acc += anti(hi) - anti(lo);
        }
        acc
    }

    /// Left-endpoint grid sum `Σ f(t_i⁻) Δ` over steps `i ∈ [i_from, i_to)`,
    /// the discretization used by all martingale constructions.
    pub fn grid_sum(&self, grid: &TimeGrid, i_from: usize, i_to: usize) -> f64 {
        let dt = grid.step();
        let mut acc = 0.0;
        for i in i_from..i_to {
            acc += self.eval_left(grid.node(i)) * dt;
        }
        acc
    }

    /// Left-endpoint grid sum of `f²`.
    pub fn grid_sum_squares(&self, grid: &TimeGrid, i_from: usize, i_to: usize) -> f64 {
        let dt = grid.step();
        let mut acc = 0.0;
        for i in i_from..i_to {
            let v = self.eval_left(grid.node(i));
            acc += v * v * dt;
        }
        acc
    }
}
