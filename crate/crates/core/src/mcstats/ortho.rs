//! Orthogonality estimator and family-wise error control.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{StatsError, TestFunctionFamily};

/// Result of a single `E[X · g(Z)] = 0` test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub label: String,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
    /// Samples dropped upstream (weight underflow, occupancy floors, ...).
    pub discarded: usize,
}

/// Family-wise threshold selection for a suite of orthogonality tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    /// Use a fixed |z| threshold.
    Fixed(f64),
    /// Bonferroni-corrected two-sided normal quantile over the suite size.
    Bonferroni { alpha: f64 },
}

impl ThresholdPolicy {
    pub fn threshold(&self, n_tests: usize) -> f64 {
        match *self {
            ThresholdPolicy::Fixed(z) => z,
            ThresholdPolicy::Bonferroni { alpha } => familywise_threshold(n_tests, alpha),
        }
    }
}

/// Two-sided normal quantile for the Bonferroni-corrected level
/// `target_alpha / n_tests`: the returned `t` satisfies
/// `P(|N(0,1)| > t) = target_alpha / n_tests`.
pub fn familywise_threshold(n_tests: usize, target_alpha: f64) -> f64 {
    assert!(n_tests >= 1, "n_tests must be >= 1");
    assert!(
        target_alpha > 0.0 && target_alpha < 1.0,
        "target_alpha must be in (0, 1)"
    );
    let per_test = target_alpha / n_tests as f64;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(1.0 - per_test / 2.0)
}

/// Run the whole family of test functions against samples `x` with
/// conditioning columns `z_cols` (one column per coordinate, each of length
/// `n`). `discarded` is recorded verbatim into each report.
pub fn orthogonality_test(
    label_prefix: &str,
    x: &[f64],
    z_cols: &[Vec<f64>],
    family: &TestFunctionFamily,
    threshold: f64,
    discarded: usize,
) -> Result<Vec<OrthogonalityReport>, StatsError> {
    let n = x.len();
    if n < 1000 {
        return Err(StatsError::InsufficientSamples { needed: 1000, have: n });
    }
    if z_cols.len() != family.coords() {
        return Err(StatsError::InvalidArgument(format!(
            "conditioning columns ({}) do not match family coordinates ({})",
            z_cols.len(),
            family.coords()
        )));
    }
    for col in z_cols {
        if col.len() != n {
            return Err(StatsError::InvalidArgument(
                "conditioning column length differs from sample length".to_string(),
            ));
        }
    }

    let mut reports = Vec::with_capacity(family.len());
    let mut z_row = vec![0.0; family.coords()];
    for k in 0..family.len() {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            for (c, col) in z_cols.iter().enumerate() {
                z_row[c] = col[i];
            }
            let v = x[i] * family.eval(k, &z_row);
            sum += v;
            sumsq += v * v;
        }
        let nf = n as f64;
        let estimate = sum / nf;
        let var = (sumsq - nf * estimate * estimate).max(0.0) / (nf - 1.0);
        let stderr = (var / nf).sqrt();
        let z = if stderr > 0.0 {
            estimate / stderr
        } else if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        reports.push(OrthogonalityReport {
            label: format!("{label_prefix} {}", family.label(k)),
            estimate,
            stderr,
            z,
            n,
            threshold,
            pass: z.abs() <= threshold,
            discarded,
        });
    }
    Ok(reports)
}

/// CLT confidence interval: returns `(mean, halfwidth)` at the given
/// two-sided confidence level.
pub fn mean_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64), StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientSamples { needed: 2, have: samples.len() });
    }
    if !(0.0..1.0).contains(&confidence) || confidence <= 0.0 {
        return Err(StatsError::InvalidArgument(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    let (mean, se) = mean_stderr(samples);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let q = normal.inverse_cdf(0.5 + confidence / 2.0);
    Ok((mean, q * se))
}

/// Sample mean and its standard error.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance and the standard error of that variance estimate
/// (moment-based: `se² ≈ (m4 - s⁴)/n`).
pub fn variance_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let m4 = samples
        .iter()
        .map(|x| {
            let d = x - mean;
            d * d * d * d
        })
        .sum::<f64>()
        / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    (var, se)
}

/// A suite of orthogonality reports plus the family-wise summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSet {
    pub name: String,
    pub reports: Vec<OrthogonalityReport>,
    pub n_tests: usize,
    pub threshold: f64,
    pub n_fail: usize,
    pub pass: bool,
}

impl ReportSet {
    pub fn new(name: impl Into<String>, reports: Vec<OrthogonalityReport>) -> Self {
        let n_tests = reports.len();
        let threshold = reports.first().map(|r| r.threshold).unwrap_or(f64::NAN);
        let n_fail = reports.iter().filter(|r| !r.pass).count();
        Self {
            name: name.into(),
            reports,
            n_tests,
            threshold,
            n_fail,
            pass: n_fail == 0,
        }
    }

    pub fn max_abs_z(&self) -> f64 {
        self.reports.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcstats::RngSeed;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_column(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = RngSeed::new(seed).path_rng(0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn zero_samples_give_zero_z_and_pass() {
        let x = vec![0.0; 2000];
        let z = vec![normal_column(3, 2000)];
        let fam = TestFunctionFamily::standardized(&[normal_column(4, 1000)]);
        let reports = orthogonality_test("null", &x, &z, &fam, 4.0, 0).unwrap();
        for r in reports {
            assert_eq!(r.estimate, 0.0);
            assert_eq!(r.z, 0.0);
            assert!(r.pass);
        }
    }

    #[test]
    fn independent_pair_passes_at_threshold_four() {
        let n = 10_000;
        let x = normal_column(10, n);
        let z = vec![normal_column(11, n)];
        let fam = TestFunctionFamily::standardized(&[normal_column(12, 10_000)]);
        let reports = orthogonality_test("indep", &x, &z, &fam, 4.0, 0).unwrap();
        for r in &reports {
            assert!(r.pass, "false alarm: {} z={}", r.label, r.z);
        }
    }

    /// Planted dependence X = Z must be detected through g = tanh(Z); the
    /// oracle for E[Z tanh Z] is a brute-force quadrature of the integrand.
    #[test]
    fn planted_dependence_is_detected() {
        let n = 10_000;
        let z = normal_column(20, n);
        let x = z.clone();
        let fam = TestFunctionFamily::standardized(&[normal_column(21, 10_000)]);
        let reports = orthogonality_test("planted", &x, &[z], &fam, 4.0, 0).unwrap();
        let tanh_report = &reports[1];
        assert!(
            tanh_report.z.abs() > 4.0,
            "no power: z = {}",
            tanh_report.z
        );

        // Simpson quadrature of z·tanh(z)·phi(z) over [-12, 12].
        let m = 4000;
        let (a, b) = (-12.0f64, 12.0f64);
        let h = (b - a) / m as f64;
        let f = |z: f64| z * z.tanh() * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut integral = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * f(a + i as f64 * h);
        }
        integral *= h / 3.0;
        assert!((integral - 0.6057).abs() < 1e-3, "oracle: {integral}");
        assert!((tanh_report.estimate - integral).abs() < 4.0 * tanh_report.stderr);
    }

    #[test]
    fn short_input_is_rejected() {
        let fam = TestFunctionFamily::standardized(&[vec![0.0, 1.0]]);
        let err = orthogonality_test("short", &[1.0; 10], &[vec![0.0; 10]], &fam, 4.0, 0);
        assert!(matches!(
            err,
            Err(StatsError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn familywise_threshold_known_values() {
        assert!((familywise_threshold(1, 0.05) - 1.959964).abs() < 1e-5);
        // n = 100, alpha = 0.01: per-test level 1e-4, two-sided quantile.
        let t = familywise_threshold(100, 0.01);
        let normal = Normal::new(0.0, 1.0).unwrap();
        assert!((t - normal.inverse_cdf(1.0 - 5e-5)).abs() < 1e-9);
        assert!((t - 3.8906).abs() < 1e-3, "got {t}");
    }

    #[test]
    fn familywise_threshold_edges_and_monotonicity() {
        assert!(familywise_threshold(1, 0.999999) < 1e-5);
        let mut prev = 0.0;
        for n in [1, 2, 5, 10, 100, 1000] {
            let t = familywise_threshold(n, 0.05);
            assert!(t >= prev, "not nondecreasing at n={n}");
            prev = t;
        }
    }

    #[test]
    fn mean_ci_examples() {
        let (m, hw) = mean_ci(&[2.5; 50], 0.95).unwrap();
        assert_eq!(m, 2.5);
        assert_eq!(hw, 0.0);

        let xs = normal_column(30, 10_000);
        let (_, hw) = mean_ci(&xs, 0.95).unwrap();
        assert!((hw - 0.0196).abs() < 0.1 * 0.0196, "halfwidth {hw}");

        assert!(matches!(
            mean_ci(&[1.0], 0.95),
            Err(StatsError::InsufficientSamples { .. })
        ));
    }
}
