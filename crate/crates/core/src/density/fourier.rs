//! Transition densities by Fourier inversion of the Lévy exponent:
//! `φ_u(x) = (1/2π) ∫ e^{-iλx} e^{-uΦ(λ)} dλ`, evaluated with one FFT on a
//! midpoint λ-grid. The spectral cutoff is chosen adaptively: the smallest
//! dyadic `Λ` with `|e^{-uΦ(Λ)}| < 1e-12` when the characteristic function
//! decays fast enough (any spec with a Gaussian part), otherwise — for the
//! gamma subordinator, whose characteristic function decays only
//! algebraically — the largest cutoff the requested resolution supports,
//! guarded by a looser algebraic tail budget.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ClosedFormFamily, DensityError};
use crate::levy::{JumpSpec, ProcessSpec};

/// How a [`DensityGrid`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    FourierInversion,
    ClosedForm,
}

/// Tunables of the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierOptions {
    pub x_halfwidth: f64,
    /// Number of grid cells; must be a power of two ≥ 2^10. The grid carries
    /// `n_points + 1` nodes including both endpoints.
    pub n_points: usize,
    /// Round-off tail budget for the dyadic cutoff scan.
    pub tail_roundoff: f64,
    /// Fallback tail budget when the characteristic function decays only
    /// algebraically.
    pub tail_algebraic: f64,
    /// Largest dyadic exponent scanned for the round-off cutoff.
    pub max_dyadic_exp: u32,
    /// Cap on internal resolution refinement (factor `2^refine_cap`).
    pub refine_cap: u32,
    /// Mass-check budget: trapezoid mass must be within this of 1.
    pub mass_tolerance: f64,
    /// Accept the spec without the density-existence whitelist check.
    pub assume_density: bool,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self {
            x_halfwidth: 10.0,
            n_points: 1 << 12,
            tail_roundoff: 1e-12,
            tail_algebraic: 1e-3,
            max_dyadic_exp: 24,
            refine_cap: 6,
            mass_tolerance: 5e-3,
            assume_density: false,
        }
    }
}

/// Equispaced spatial grid with density values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityGrid {
    pub u: f64,
    pub xs: Vec<f64>,
    pub phis: Vec<f64>,
    pub method: DensityMethod,
    /// Number of negative inversion ripples clamped to zero.
    pub clamped: usize,
    /// Most negative pre-clamp value (0 if none).
    pub min_ripple: f64,
    /// Trapezoid mass before clamping.
    pub mass: f64,
    source: GridSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum GridSource {
    Fourier { spec: ProcessSpec, opts: FourierOptions },
    Closed { family: ClosedFormFamily },
}

impl DensityGrid {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    /// Linear interpolation on the grid; 0 outside.
    pub fn eval(&self, x: f64) -> f64 {
        let dx = self.dx();
        let pos = (x - self.xs[0]) / dx;
        if pos < 0.0 || pos > (self.xs.len() - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.xs.len() - 2);
        let frac = pos - i as f64;
        self.phis[i] * (1.0 - frac) + self.phis[i + 1] * frac
    }
}

fn cf_magnitude(spec: &ProcessSpec, u: f64, lambda: f64) -> f64 {
    (-u * spec.char_exponent(lambda).re).exp()
}

fn check_has_density(spec: &ProcessSpec, u: f64) -> Result<(), DensityError> {
    if spec.gaussian_var() > 0.0 {
        return Ok(());
    }
    match spec.jumps() {
        JumpSpec::GammaSubordinator { .. } => Ok(()),
        JumpSpec::CompoundPoisson { .. } => Err(DensityError::NoDensity {
            u,
            reason: "pure compound Poisson law has an atom at zero; add a Gaussian component"
                .to_string(),
        }),
        JumpSpec::None => Err(DensityError::NoDensity {
            u,
            reason: "deterministic process (no Gaussian part, no jumps)".to_string(),
        }),
    }
}

/// Fourier-inversion density grid with default options.
pub fn density_fourier(
    spec: &ProcessSpec,
    u: f64,
    x_halfwidth: f64,
    n_points: usize,
) -> Result<DensityGrid, DensityError> {
    density_fourier_with(spec, u, &FourierOptions { x_halfwidth, n_points, ..Default::default() })
}

/// Fourier-inversion density grid. The grid is centered at the mean of
/// `ξ_u`, so subordinator bulk mass stays inside the window.
pub fn density_fourier_with(
    spec: &ProcessSpec,
    u: f64,
    opts: &FourierOptions,
) -> Result<DensityGrid, DensityError> {
    let phis = invert(spec, u, opts, false)?;
    let center = spec.mean_rate() * u;
    let dx = 2.0 * opts.x_halfwidth / opts.n_points as f64;
    let xs: Vec<f64> =
        (0..=opts.n_points).map(|j| center - opts.x_halfwidth + j as f64 * dx).collect();

    let mass = trapezoid(dx, &phis);
    if (mass - 1.0).abs() > opts.mass_tolerance {
        return Err(DensityError::TruncationBudgetExceeded(format!(
            "mass check failed: trapezoid mass {mass:.6} outside 1 ± {}",
            opts.mass_tolerance
        )));
    }

    // Clamp negative ripple after the mass check: downstream importance
    // weights must be nonnegative.
    let mut clamped = 0;
    let mut min_ripple = 0.0f64;
    let mut phis = phis;
    for p in &mut phis {
        if *p < 0.0 {
            min_ripple = min_ripple.min(*p);
            clamped += 1;
            *p = 0.0;
        }
    }

    Ok(DensityGrid {
        u,
        xs,
        phis,
        method: DensityMethod::FourierInversion,
        clamped,
        min_ripple,
        mass,
        source: GridSource::Fourier { spec: *spec, opts: *opts },
    })
}

/// Closed-form density grid on the same kind of centered window, for use as
/// an oracle and as an exact density source.
pub fn density_closed_grid(
    spec: &ProcessSpec,
    u: f64,
    x_halfwidth: f64,
    n_points: usize,
) -> Result<DensityGrid, DensityError> {
    let family = ClosedFormFamily::from_spec(spec)?;
    let center = spec.mean_rate() * u;
    let dx = 2.0 * x_halfwidth / n_points as f64;
    let xs: Vec<f64> = (0..=n_points).map(|j| center - x_halfwidth + j as f64 * dx).collect();
    let phis: Vec<f64> = xs.iter().map(|&x| family.pdf(u, x)).collect();
    let mass = trapezoid(dx, &phis);
    Ok(DensityGrid {
        u,
        xs,
        phis,
        method: DensityMethod::ClosedForm,
        clamped: 0,
        min_ripple: 0.0,
        mass,
        source: GridSource::Closed { family },
    })
}

/// Spatial derivative `φ'_u` on the grid nodes. Fourier grids use spectral
/// differentiation (the integrand is multiplied by `-iλ` before inversion);
/// closed-form grids use the analytic derivative.
pub fn density_spatial_derivative(grid: &DensityGrid) -> Result<Vec<f64>, DensityError> {
    match &grid.source {
        GridSource::Fourier { spec, opts } => invert(spec, grid.u, opts, true),
        GridSource::Closed { family } => {
            Ok(grid.xs.iter().map(|&x| family.pdf_deriv(grid.u, x)).collect())
        }
    }
}

fn trapezoid(dx: f64, ys: &[f64]) -> f64 {
    let inner: f64 = ys[1..ys.len() - 1].iter().sum();
    dx * (inner + 0.5 * (ys[0] + ys[ys.len() - 1]))
}

/// Core inversion. Returns `n_points + 1` values on the centered window.
fn invert(
    spec: &ProcessSpec,
    u: f64,
    opts: &FourierOptions,
    derivative: bool,
) -> Result<Vec<f64>, DensityError> {
    if !(u.is_finite() && u > 0.0) {
        return Err(DensityError::InvalidGrid(format!("time must be positive, got {u}")));
    }
    if !opts.n_points.is_power_of_two() || opts.n_points < (1 << 10) {
        return Err(DensityError::InvalidGrid(format!(
            "n_points must be a power of two >= 1024, got {}",
            opts.n_points
        )));
    }
    if !(opts.x_halfwidth.is_finite() && opts.x_halfwidth > 0.0) {
        return Err(DensityError::InvalidGrid(format!(
            "x_halfwidth must be positive, got {}",
            opts.x_halfwidth
        )));
    }
    if !opts.assume_density {
        check_has_density(spec, u)?;
    }

    let center = spec.mean_rate() * u;
    let dx = 2.0 * opts.x_halfwidth / opts.n_points as f64;
    let lambda_grid = std::f64::consts::PI / dx;

    // Dyadic round-off cutoff, when the spectral tail reaches it at all.
    let dyadic_cutoff = (0..=opts.max_dyadic_exp)
        .map(|k| (1u64 << k) as f64)
        .find(|&l| cf_magnitude(spec, u, l) < opts.tail_roundoff);

    // Internal refinement factor 2^m: the working resolution must push the
    // cutoff past the dyadic target (round-off regime) or at least under the
    // algebraic tail budget (slowly decaying characteristic functions).
    let refine = match dyadic_cutoff {
        Some(target) => {
            let mut m = 0u32;
            while lambda_grid * f64::from(1u32 << m) < target {
                m += 1;
            }
            m
        }
        None => {
            let mut chosen = None;
            for m in 0..=opts.refine_cap {
                if cf_magnitude(spec, u, lambda_grid * f64::from(1u32 << m)) < opts.tail_algebraic {
                    chosen = Some(m);
                    break;
                }
            }
            chosen.ok_or_else(|| {
                DensityError::TruncationBudgetExceeded(format!(
                    "|e^(-uΦ)| = {:.3e} at λ = {:.3e}, above both the round-off budget {} \
                     (scanned dyadic cutoffs up to 2^{}) and the algebraic budget {}",
                    cf_magnitude(spec, u, lambda_grid * f64::from(1u32 << opts.refine_cap)),
                    lambda_grid * f64::from(1u32 << opts.refine_cap),
                    opts.tail_roundoff,
                    opts.max_dyadic_exp,
                    opts.tail_algebraic,
                ))
            })?
        }
    };

    let stride = 1usize << refine;
    let dx_int = dx / stride as f64;
    let n_int = opts.n_points * stride;
    // Factor 4 of zero padding keeps the periodization images 8 halfwidths
    // away from the window.
    let n_fft = 4 * n_int;
    let d_lambda = 2.0 * std::f64::consts::PI / (n_fft as f64 * dx_int);
    let lambda_max = 0.5 * n_fft as f64 * d_lambda;
    let lambda0 = -lambda_max + 0.5 * d_lambda;
    let x0 = center - opts.x_halfwidth;

    let mut buf: Vec<Complex64> = (0..n_fft)
        .map(|k| {
            let lambda = lambda0 + k as f64 * d_lambda;
            let mut cf = (-(spec.char_exponent(lambda)) * u).exp();
            if derivative {
                cf *= Complex64::new(0.0, -lambda);
            }
            cf * Complex64::from_polar(1.0, -(k as f64) * d_lambda * x0)
        })
        .collect();

    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);

    let scale = d_lambda / (2.0 * std::f64::consts::PI);
    let out: Vec<f64> = (0..=opts.n_points)
        .map(|j| {
            let jj = j * stride;
            let x = x0 + jj as f64 * dx_int;
            (buf[jj] * Complex64::from_polar(1.0, -lambda0 * x)).re * scale
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;

    fn brownian() -> ProcessSpec {
        ProcessSpec::standard_brownian()
    }

    fn gamma_spec(a: f64, b: f64) -> ProcessSpec {
        ProcessSpec::new(0.0, 0.0, JumpSpec::GammaSubordinator { a, b }).unwrap()
    }

    #[test]
    fn gaussian_density_matches_closed_form() {
        let grid = density_fourier(&brownian(), 1.0, 8.0, 1 << 12).unwrap();
        let fam = ClosedFormFamily::Gaussian { drift: 0.0, var_rate: 1.0 };
        let max_err = grid
            .xs
            .iter()
            .zip(&grid.phis)
            .map(|(&x, &p)| (p - fam.pdf(1.0, x)).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1e-6, "max abs err {max_err}");
        assert!((grid.mass - 1.0).abs() < 5e-3);
    }

    #[test]
    fn gamma_density_matches_exponential_away_from_origin() {
        let grid = density_fourier(&gamma_spec(1.0, 1.0), 1.0, 12.0, 1 << 14).unwrap();
        let mut max_err = 0.0f64;
        for (&x, &p) in grid.xs.iter().zip(&grid.phis) {
            if x >= 0.25 {
                max_err = max_err.max((p - (-x).exp()).abs());
            }
        }
        assert!(max_err <= 1e-3, "max abs err away from 0: {max_err}");
        assert!((grid.mass - 1.0).abs() < 5e-3, "mass {}", grid.mass);
    }

    #[test]
    fn pure_compound_poisson_has_no_density() {
        let spec = ProcessSpec::new(
            0.0,
            0.0,
            JumpSpec::CompoundPoisson { rate: 1.0, jump_law: JumpLaw::Normal { mean: 0.0, var: 1.0 } },
        )
        .unwrap();
        assert!(matches!(
            density_fourier(&spec, 1.0, 8.0, 1 << 10),
            Err(DensityError::NoDensity { .. })
        ));
    }

    #[test]
    fn heavy_algebraic_tail_exceeds_truncation_budget() {
        // a·u = 0.02 makes |cf| ~ λ^(-0.02): no reachable cutoff.
        let spec = gamma_spec(0.02, 1.0);
        assert!(matches!(
            density_fourier(&spec, 1.0, 6.0, 1 << 10),
            Err(DensityError::TruncationBudgetExceeded(_))
        ));
    }

    #[test]
    fn derivative_matches_gaussian_analytic_form() {
        let grid = density_fourier(&brownian(), 1.0, 8.0, 1 << 12).unwrap();
        let deriv = density_spatial_derivative(&grid).unwrap();
        let fam = ClosedFormFamily::Gaussian { drift: 0.0, var_rate: 1.0 };
        let max_err = grid
            .xs
            .iter()
            .zip(&deriv)
            .map(|(&x, &d)| (d - fam.pdf_deriv(1.0, x)).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-6, "max abs err {max_err}");

        // At x = 1 the analytic value is -φ(1).
        let idx = grid.xs.iter().position(|&x| (x - 1.0).abs() < 1e-9).unwrap();
        assert!((deriv[idx] + 0.2419707245).abs() < 1e-7);
    }

    #[test]
    fn derivative_is_antisymmetric_and_integrates_to_zero() {
        let spec = ProcessSpec::new(
            0.0,
            0.5,
            JumpSpec::CompoundPoisson { rate: 1.0, jump_law: JumpLaw::Normal { mean: 0.0, var: 1.0 } },
        )
        .unwrap();
        let grid = density_fourier(&spec, 1.0, 10.0, 1 << 12).unwrap();
        let deriv = density_spatial_derivative(&grid).unwrap();
        let n = grid.xs.len();
        // φ'(0) = 0 for a symmetric law.
        let mid = n / 2;
        assert!(deriv[mid].abs() < 1e-8, "φ'(0) = {}", deriv[mid]);
        for j in 0..n {
            assert!(
                (deriv[j] + deriv[n - 1 - j]).abs() < 1e-8,
                "antisymmetry broken at {}",
                grid.xs[j]
            );
        }
        let integral = trapezoid(grid.dx(), &deriv);
        assert!(integral.abs() < 1e-6, "∫φ' = {integral}");
    }

    #[test]
    fn interpolation_is_exact_on_nodes_and_zero_outside() {
        let grid = density_fourier(&brownian(), 1.0, 6.0, 1 << 10).unwrap();
        let j = 100;
        assert_eq!(grid.eval(grid.xs[j]), grid.phis[j]);
        assert_eq!(grid.eval(100.0), 0.0);
        assert_eq!(grid.eval(-100.0), 0.0);
    }

    #[test]
    fn rejects_bad_grid_requests() {
        assert!(matches!(
            density_fourier(&brownian(), 1.0, 8.0, 1000),
            Err(DensityError::InvalidGrid(_))
        ));
        assert!(matches!(
            density_fourier(&brownian(), -1.0, 8.0, 1 << 10),
            Err(DensityError::InvalidGrid(_))
        ));
    }
}
