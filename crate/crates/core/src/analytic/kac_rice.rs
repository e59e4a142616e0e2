//! Exact finite-N Kac-Rice quantities for the Qualls ensemble.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};

use super::covariance::CovarianceModel;

/// Below this lag (scaled variable) the reduced quantities come from the
/// small-lag expansion; the closed forms lose about `ε/x⁴` there.
pub const KAC_RICE_SERIES_CUTOFF: f64 = 0.5;

/// Slack allowed for `|ρ| > 1` before it is treated as an evaluator bug.
pub const RHO_SLACK: f64 = 1e-12;

/// `λ₂ = (1/N) Σ n² = (N+1)(2N+1)/6`.
pub fn lambda2(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    let n = n as f64;
    Ok((n + 1.0) * (2.0 * n + 1.0) / 6.0)
}

/// Expected number of zeros of `X_N` on `[a, b] ⊆ [0, 2π]`: `√λ₂ (b - a)/π`.
pub fn expected_zeros(n: usize, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
    }
    if a < 0.0 || b > 2.0 * PI + 1e-12 {
        return Err(Error::invalid(format!("interval [{a}, {b}] not inside [0, 2π]")));
    }
    Ok(lambda2(n)?.sqrt() * (b - a) / PI)
}

pub fn covariance_triple(model: &CovarianceModel, t: f64) -> (f64, f64, f64) {
    model.triple(t)
}

/// The bracket `√(1 - ρ²) + ρ arcsin ρ`, which lies in `[1, π/2]` on `[-1, 1]`.
pub fn kernel_bracket(rho: f64) -> f64 {
    (1.0 - rho * rho).max(0.0).sqrt() + rho * rho.asin()
}

/// `∬ |z₁||z₂| exp(-(z₁² + 2ρz₁z₂ + z₂²)/(2(1-ρ²))) dz = 4(1-ρ²)(1 + ρ arcsin ρ/√(1-ρ²))`.
///
/// Written as `4√(1-ρ²)·(√(1-ρ²) + ρ arcsin ρ)` so that `ρ → ±1` gives 0 exactly.
pub fn bleher_di_kernel(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    let s = (1.0 - rho * rho).sqrt();
    Ok(4.0 * s * kernel_bracket(rho))
}

fn clamp_rho(rho: f64, t: f64) -> Result<f64> {
    if rho.is_nan() {
        return Err(Error::invariant(format!("ρ is NaN at lag {t}")));
    }
    if rho.abs() > 1.0 + RHO_SLACK {
        return Err(Error::invariant(format!("|ρ| = {} exceeds 1 at lag {t}", rho.abs())));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// Reduced Kac-Rice quantities at lag `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KacRiceTerms {
    /// `[λ(1 - r²) - r'²] / (1 - r²)^{3/2}`
    pub factor: f64,
    pub rho: f64,
}

impl KacRiceTerms {
    /// `factor · (√(1-ρ²) + ρ arcsin ρ)`.
    pub fn value(&self) -> f64 {
        self.factor * kernel_bracket(self.rho)
    }
}

/// Evaluate the reduced quantities, switching to the small-lag expansion
/// below `crossover` in the scaled variable.
pub fn kac_rice_terms_with(model: &CovarianceModel, t: f64, crossover: f64) -> Result<KacRiceTerms> {
    let scaled = t.abs() * model.crossover_scale();
    if let (Some(series), true) = (model.series(), scaled < crossover) {
        if t == 0.0 {
            return Err(Error::invalid("Kac-Rice terms are singular at lag 0"));
        }
        let (factor, rho) = series.kac_rice().factor_and_rho(t);
        return Ok(KacRiceTerms {
            factor,
            rho: clamp_rho(rho, t)?,
        });
    }
    let (r, r1, r2) = model.triple(t);
    let lambda = model.lambda2();
    let u = model.one_minus_r(t);
    let one_minus_r2 = u * (2.0 - u);
    if !(one_minus_r2 > 0.0) {
        return Err(Error::invalid(format!("covariance matrix singular at lag {t}")));
    }
    let numer = lambda * one_minus_r2 - r1 * r1;
    let rho = (r2 * one_minus_r2 + r1 * r1 * r) / numer;
    Ok(KacRiceTerms {
        factor: numer / one_minus_r2.powf(1.5),
        rho: clamp_rho(rho, t)?,
    })
}

pub fn kac_rice_terms(model: &CovarianceModel, t: f64) -> Result<KacRiceTerms> {
    kac_rice_terms_with(model, t, KAC_RICE_SERIES_CUTOFF)
}

/// `ρ(t)`, the correlation of the two derivatives conditioned on zeros at both ends.
pub fn rho(model: &CovarianceModel, t: f64) -> Result<f64> {
    Ok(kac_rice_terms(model, t)?.rho)
}

/// `μ(t) = [λ(1 - r²) - r'²]/(1 - r²)`.
pub fn mu(model: &CovarianceModel, t: f64) -> f64 {
    let (_, r1, _) = model.triple(t);
    let u = model.one_minus_r(t);
    let q = u * (2.0 - u);
    (model.lambda2() * q - r1 * r1) / q
}

/// Integrand of the second factorial moment of `Z_{X_N}` at lag `t ∈ (0, 2π)`:
/// `E Z² - E Z = ∫₀^{2π} (this) dt`.
pub fn second_moment_integrand(n: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 2.0 * PI) {
        return Err(Error::invalid(format!("lag {t} outside (0, 2π)")));
    }
    let model = CovarianceModel::exact(n);
    Ok(2.0 / PI * kac_rice_terms(&model, t)?.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub degree: usize,
    pub variance: f64,
    /// `J = Var - E Z`.
    pub j: f64,
    pub expected: f64,
    /// Estimated absolute quadrature error of `variance`.
    pub error: f64,
}

impl VarianceReport {
    /// `E[Z(Z - 1)] = Var + (E Z)² - E Z`.
    pub fn factorial_moment2(&self) -> f64 {
        self.j + self.expected * self.expected
    }
}

/// Exact variance of the zero count of `X_N` on the full circle.
///
/// `J = (4m/π) ∫₀^{πm} [M(x) - λ'] dx` in the scaled variable `x = mt`, using
/// the symmetry about `t = π`; then `Var = J + E Z`.
pub fn variance_exact(n: usize, quad_tol: f64) -> Result<VarianceReport> {
    if n == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    let expected = 2.0 * lambda2(n)?.sqrt();
    if n == 1 {
        // r(t) = cos t: the process vanishes at t and t + π, always two zeros.
        return Ok(VarianceReport {
            degree: 1,
            variance: 0.0,
            j: -expected,
            expected,
            error: 0.0,
        });
    }
    let model = CovarianceModel::scaled(n);
    let m = n as f64 + 0.5;
    let lambda = model.lambda2();
    let scale = 4.0 * m / PI;
    let end = PI * m;
    let mut breaks: Vec<f64> = (0..).map(|k| k as f64 * PI).take_while(|&x| x < end).collect();
    breaks.push(end);
    let mut failure: Option<Error> = None;
    let q = integrate_with_breaks(
        |x| {
            if x == 0.0 {
                return -lambda;
            }
            match kac_rice_terms(&model, x) {
                Ok(k) => k.value() - lambda,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &breaks,
        QuadOptions {
            abs_tol: quad_tol / scale,
            rel_tol: 0.0,
            max_intervals: 200_000,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let q = q.map_err(|e| match e {
        Error::ToleranceNotMet {
            requested,
            achieved,
            context,
        } => Error::ToleranceNotMet {
            requested: requested * scale,
            achieved: achieved * scale,
            context,
        },
        other => other,
    })?;
    let j = scale * q.value;
    Ok(VarianceReport {
        degree: n,
        variance: j + expected,
        j,
        expected,
        error: scale * q.error,
    })
}

/// Exact variance of the zero count of `X_N` on an interval of length `len ≤ 2π`.
///
/// In the scaled variable, with `L = m·len`,
/// `Var = E Z + (2/π²) ∫₀^L (L - u) [M(u) - λ'] du`.
pub fn variance_interval(n: usize, len: f64, quad_tol: f64) -> Result<VarianceReport> {
    if n == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    if !(len > 0.0 && len <= 2.0 * PI) {
        return Err(Error::invalid(format!("interval length {len} outside (0, 2π]")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    let expected = len * lambda2(n)?.sqrt() / PI;
    if n == 1 {
        // zeros sit at φ and φ + π with φ uniform
        let p = if len <= PI { len / PI } else { len / PI - 1.0 };
        let variance = p * (1.0 - p);
        return Ok(VarianceReport {
            degree: 1,
            variance,
            j: variance - expected,
            expected,
            error: 0.0,
        });
    }
    if len == 2.0 * PI {
        return variance_exact(n, quad_tol);
    }
    let model = CovarianceModel::scaled(n);
    let m = n as f64 + 0.5;
    let lambda = model.lambda2();
    let big_l = m * len;
    let scale = 2.0 / (PI * PI);
    let mut breaks: Vec<f64> = (0..).map(|k| k as f64 * PI).take_while(|&x| x < big_l).collect();
    breaks.push(big_l);
    let mut failure: Option<Error> = None;
    let q = integrate_with_breaks(
        |u| {
            let w = big_l - u;
            if u == 0.0 {
                return -lambda * w;
            }
            match kac_rice_terms(&model, u) {
                Ok(k) => (k.value() - lambda) * w,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &breaks,
        QuadOptions {
            abs_tol: quad_tol / scale,
            rel_tol: 0.0,
            max_intervals: 200_000,
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let q = q?;
    let j = scale * q.value;
    Ok(VarianceReport {
        degree: n,
        variance: j + expected,
        j,
        expected,
        error: scale * q.error,
    })
}

/// `∫₀^{2π}` of the second-moment integrand in the original variable `t`
/// (no symmetry, no scaling); an independent route to `E Z² - E Z`.
pub fn factorial_moment2_direct(n: usize, tol: f64) -> Result<f64> {
    let model = CovarianceModel::exact(n);
    let mut failure: Option<Error> = None;
    let breaks: Vec<f64> = (0..=2 * n).map(|k| k as f64 * PI / n as f64).collect();
    let r = integrate_with_breaks(
        |t| {
            if t <= 0.0 || t >= 2.0 * PI {
                return 0.0;
            }
            match kac_rice_terms(&model, t) {
                Ok(k) => 2.0 / PI * k.value(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &breaks,
        QuadOptions::abs(tol),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value)
}

/// `E|V₁||V₂|` for unit-variance jointly Gaussian `V₁, V₂` with correlation `ρ`:
/// `(2/π)(√(1-ρ²) + ρ arcsin ρ)`.
pub fn abs_product_moment(rho: f64) -> Result<f64> {
    let k = bleher_di_kernel(rho)?;
    if rho.abs() == 1.0 {
        return Ok(2.0 / PI);
    }
    // kernel/(2π√(1-ρ²)) is the Gaussian normalization of the 2D integral
    Ok(k / (2.0 * PI * (1.0 - rho * rho).sqrt()))
}

/// Two-dimensional adaptive quadrature of the Bleher-Di integrand; an
/// independent check of the closed form.
pub fn bleher_di_quadrature(rho: f64, tol: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("quadrature route needs |ρ| < 1"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let d = 1.0 - rho * rho;
    // both marginals are standard normal; 9 deviations leave < 1e-17
    let reach = 9.0;
    let inner_opts = QuadOptions {
        abs_tol: tol * 1e-2,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let mut failure = None;
    let mut quadrant = |s: f64| -> Result<f64> {
        // z₁ ≥ 0 and s·z₂ ≥ 0; for fixed z₁ the integrand in z₂ is a Gaussian
        // bump centred at -sρz₁ with width √d
        let inner = |z1: f64| -> Result<f64> {
            let f = |z2: f64| z2 * (-(z1 * z1 + 2.0 * s * rho * z1 * z2 + z2 * z2) / (2.0 * d)).exp();
            let centre = (-s * rho * z1).max(0.0);
            let w = reach * d.sqrt();
            let mut pts = vec![0.0, (centre - w).max(0.0), centre, centre + w];
            pts.dedup();
            Ok(integrate_with_breaks(f, &pts, inner_opts)?.value)
        };
        let r = integrate(
            |z1| match inner(z1) {
                Ok(v) => z1 * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            reach,
            QuadOptions {
                abs_tol: tol / 4.0,
                rel_tol: 0.0,
                max_intervals: 4000,
            },
        )?;
        Ok(r.value)
    };
    let total = 2.0 * (quadrant(1.0)? + quadrant(-1.0)?);
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda2_values() {
        assert_eq!(lambda2(1).unwrap(), 1.0);
        assert_eq!(lambda2(10).unwrap(), 38.5);
        let brute: f64 = (1..=100).map(|n| (n * n) as f64).sum::<f64>() / 100.0;
        assert_eq!(lambda2(100).unwrap(), 3383.5);
        assert!((brute - 3383.5).abs() < 1e-9);
        assert!(lambda2(0).is_err());
    }

    #[test]
    fn expected_zero_values() {
        assert!((expected_zeros(1, 0.0, 2.0 * PI).unwrap() - 2.0).abs() < 1e-15);
        let full = expected_zeros(100, 0.0, 2.0 * PI).unwrap();
        assert!((full - 2.0 * 3383.5f64.sqrt()).abs() < 1e-12);
        assert!((full - 116.336).abs() < 1e-3);
        let half = expected_zeros(100, 0.0, PI).unwrap();
        assert!((2.0 * half - full).abs() < 1e-12);
        assert!(expected_zeros(3, 1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_special_values() {
        assert_eq!(bleher_di_kernel(0.0).unwrap(), 4.0);
        assert_eq!(bleher_di_kernel(1.0).unwrap(), 0.0);
        assert_eq!(bleher_di_kernel(-1.0).unwrap(), 0.0);
        assert!(bleher_di_kernel(1.0 - 1e-12).unwrap() < 1e-5);
        assert!(bleher_di_kernel(1.5).is_err());
    }

    #[test]
    fn kernel_by_two_dimensional_quadrature() {
        for rho in [-0.99, -0.5, 0.0, 0.3, 0.9] {
            let q = bleher_di_quadrature(rho, 1e-11).unwrap();
            assert!((q - bleher_di_kernel(rho).unwrap()).abs() < 1e-9, "ρ = {rho}");
        }
        assert!(bleher_di_quadrature(1.0, 1e-8).is_err());
        assert!(bleher_di_quadrature(0.5, 0.0).is_err());
    }

    #[test]
    fn rho_where_covariance_vanishes() {
        // N=2 at t=π: r = 0, r' = 0, r'' = -3/2 ⇒ ρ = r''/λ = -3/5
        let model = CovarianceModel::exact(2);
        assert!((rho(&model, PI).unwrap() + 0.6).abs() < 1e-14);
    }

    #[test]
    fn rho_dual_formula() {
        use super::super::covariance::QuallsCovariance;
        let n = 10;
        let model = CovarianceModel::exact(n);
        let q = QuallsCovariance::new(n);
        let (r, r1, r2) = q.direct_sum(PI);
        let l = q.lambda2();
        let sum_form = (r2 * (1.0 - r * r) + r1 * r1 * r) / (l * (1.0 - r * r) - r1 * r1);
        assert!((rho(&model, PI).unwrap() - sum_form).abs() < 1e-10);
    }

    #[test]
    fn integrand_symmetric() {
        let a = second_moment_integrand(20, 0.3).unwrap();
        let b = second_moment_integrand(20, 2.0 * PI - 0.3).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
        assert!(second_moment_integrand(20, 0.0).is_err());
    }

    #[test]
    fn single_harmonic_has_no_variance() {
        let v = variance_exact(1, 1e-9).unwrap();
        assert_eq!(v.variance, 0.0);
        assert_eq!(v.expected, 2.0);
    }

    #[test]
    fn scaled_and_direct_routes_agree() {
        for n in [2usize, 5, 13] {
            let v = variance_exact(n, 1e-10).unwrap();
            let direct = factorial_moment2_direct(n, 1e-10).unwrap();
            assert!(
                (v.factorial_moment2() - direct).abs() < 1e-7,
                "n={n}: {} vs {direct}",
                v.factorial_moment2()
            );
            assert!(v.variance > 0.0);
        }
    }

    #[test]
    fn abs_moment_independent_case() {
        assert!((abs_product_moment(0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((abs_product_moment(1.0).unwrap() - 1.0).abs() > 0.0);
    }

    #[test]
    fn interval_variance_limits() {
        let full = variance_exact(40, 1e-10).unwrap().variance;
        let near = variance_interval(40, 2.0 * PI * (1.0 - 1e-9), 1e-10).unwrap().variance;
        assert!((near - full).abs() < 1e-6, "{near} vs {full}");
        let one = variance_interval(1, 0.5 * PI, 1e-10).unwrap();
        assert!((one.variance - 0.25).abs() < 1e-15);
        // short windows almost never hold two zeros, so Var ≈ E Z - (E Z)²
        let tiny = variance_interval(40, 1e-3, 1e-14).unwrap();
        let e = tiny.expected;
        assert!((tiny.variance - (e - e * e)).abs() < 1e-2 * e * e);
        assert!(variance_interval(40, 7.0, 1e-10).is_err());
    }

    #[test]
    fn interval_variance_monte_carlo() {
        use crate::ensembles::sample_qualls_trial;
        use crate::zeros::count_zeros;
        let (n, len, trials) = (10usize, 1.3, 10_000u64);
        let counts: Vec<f64> = (0..trials)
            .map(|k| {
                let p = sample_qualls_trial(n, 5, k).unwrap();
                count_zeros(&p, (0.2, 0.2 + len), 8.0, n).unwrap().count as f64
            })
            .collect();
        let t = trials as f64;
        let mean = counts.iter().sum::<f64>() / t;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (t - 1.0);
        let m4 = counts.iter().map(|c| (c - mean).powi(4)).sum::<f64>() / t;
        let se = ((m4 - var * var) / t).sqrt();
        let exact = variance_interval(n, len, 1e-10).unwrap();
        assert!((var - exact.variance).abs() < 4.0 * se, "{var} vs {} ± {se}", exact.variance);
        assert!((mean - exact.expected).abs() < 4.0 * (var / t).sqrt());
    }
}
