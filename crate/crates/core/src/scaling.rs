//! The large-degree limit: `g(x) = sin x/x`, the kernel `R*`, the constant
//! `c₀ = ∫₀^∞ [c0_integrand]` and the variance constant `c`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analytic::covariance::{CovarianceModel, QuallsCovariance, SincCovariance, SINC_SERIES_CUTOFF};
use crate::analytic::kac_rice::{kac_rice_terms_with, kernel_bracket, KAC_RICE_SERIES_CUTOFF};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Default truncation point of the `c₀` integral.
pub const DEFAULT_C0_CUTOFF: f64 = 500.0;
/// Default requested accuracy for `c₀`.
pub const DEFAULT_C0_TOL: f64 = 1e-6;
const MAX_C0_CUTOFF: f64 = 1e6;

/// `λ_{2,∞} = -g''(0)`.
pub const LAMBDA2_LIMIT: f64 = 1.0 / 3.0;

/// Evaluators for the sinc limit with a series fallback near the origin.
///
/// `g` and its derivatives switch to the Taylor series below
/// `series_crossover`; the ratios `R*` and the `c₀` integrand, whose
/// numerators and denominators are both `Θ(x⁴)`, switch below
/// `ratio_crossover`.
#[derive(Debug, Clone)]
pub struct LimitKernel {
    model: CovarianceModel,
    series_crossover: f64,
    ratio_crossover: f64,
}

impl Default for LimitKernel {
    fn default() -> Self {
        Self::with_crossovers(SINC_SERIES_CUTOFF, KAC_RICE_SERIES_CUTOFF)
    }
}

impl LimitKernel {
    pub fn with_crossovers(series_crossover: f64, ratio_crossover: f64) -> Self {
        LimitKernel {
            model: CovarianceModel::SincG(SincCovariance::with_crossover(series_crossover)),
            series_crossover,
            ratio_crossover,
        }
    }

    pub fn series_crossover(&self) -> f64 {
        self.series_crossover
    }

    pub fn ratio_crossover(&self) -> f64 {
        self.ratio_crossover
    }

    pub fn g_triple(&self, x: f64) -> (f64, f64, f64) {
        self.model.triple(x)
    }

    /// `[g''(1-g²) + g g'²] / [(1/3)(1-g²) - g'²]`.
    pub fn r_star(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::invalid("R* needs x > 0"));
        }
        Ok(kac_rice_terms_with(&self.model, x, self.ratio_crossover)?.rho)
    }

    /// `[(1-g²) - 3g'²]/(1-g²)^{3/2} · (√(1-R*²) + R* arcsin R*) - 1`.
    pub fn c0_integrand(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::invalid("c0 integrand needs x > 0"));
        }
        let k = kac_rice_terms_with(&self.model, x, self.ratio_crossover)?;
        Ok(3.0 * k.factor * kernel_bracket(k.rho) - 1.0)
    }
}

pub fn g_triple(x: f64) -> (f64, f64, f64) {
    LimitKernel::default().g_triple(x)
}

pub fn r_star(x: f64) -> Result<f64> {
    LimitKernel::default().r_star(x)
}

pub fn c0_integrand(x: f64) -> Result<f64> {
    LimitKernel::default().c0_integrand(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C0Estimate {
    pub c0: f64,
    pub error: f64,
    /// Truncation point `X` of the quadrature.
    pub cutoff: f64,
    /// Fitted coefficient `A` of the `A/x²` tail.
    pub tail_coefficient: f64,
    pub quadrature_error: f64,
}

/// `∫₀^X` on π-panels plus a fitted tail.
///
/// The period-averaged integrand behaves like `A/x² + B/x⁴`; `A` and `B` are
/// fitted from the integrals over `[X/10, X/2]` and `[X/2, X]` and the tail is
/// `A/X + B/(3X³)`.
fn c0_at(kernel: &LimitKernel, cutoff: f64, quad_tol: f64) -> Result<(f64, f64, f64)> {
    let panels = (cutoff / PI).round() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| k as f64 * PI).collect();
    let mut failure = None;
    let mut f = |x: f64| {
        if x == 0.0 {
            return -1.0;
        }
        kernel.c0_integrand(x).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            0.0
        })
    };
    let (decade, half) = (panels / 10, panels / 2);
    let opts = QuadOptions::abs(quad_tol / 3.0);
    let head = integrate_with_breaks(&mut f, &breaks[..=decade], opts)?;
    let mid = integrate_with_breaks(&mut f, &breaks[decade..=half], opts)?;
    let last = integrate_with_breaks(&mut f, &breaks[half..], opts)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (x0, x1, x2) = (breaks[decade], breaks[half], breaks[panels]);
    let p = |a: f64, b: f64| 1.0 / a - 1.0 / b;
    let q = |a: f64, b: f64| (a.powi(-3) - b.powi(-3)) / 3.0;
    let det = p(x0, x1) * q(x1, x2) - q(x0, x1) * p(x1, x2);
    let a = (mid.value * q(x1, x2) - q(x0, x1) * last.value) / det;
    let b = (p(x0, x1) * last.value - mid.value * p(x1, x2)) / det;
    let tail = a / x2 + b / (3.0 * x2.powi(3));
    let err = head.error + mid.error + last.error;
    Ok((head.value + mid.value + last.value + tail, err, a))
}

/// `c₀` with an error estimate.
///
/// The cutoff starts at 500 (rounded up to a multiple of 10π so the fit
/// windows end on zeros of the `sin 2x` ripple) and doubles until two
/// successive tail-corrected values agree within the budget.
pub fn compute_c0(tol: f64) -> Result<C0Estimate> {
    compute_c0_from(tol, DEFAULT_C0_CUTOFF)
}

pub fn compute_c0_from(tol: f64, start_cutoff: f64) -> Result<C0Estimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let kernel = LimitKernel::default();
    let quad_tol = tol / 4.0;
    let mut cutoff = (start_cutoff / (10.0 * PI)).ceil().max(1.0) * 10.0 * PI;
    let (mut prev, mut prev_err, mut prev_a) = c0_at(&kernel, cutoff, quad_tol)?;
    loop {
        let next_cutoff = 2.0 * cutoff;
        let (val, qerr, a) = c0_at(&kernel, next_cutoff, quad_tol)?;
        let tail_err = (val - prev).abs();
        if tail_err + qerr.max(prev_err) <= tol {
            return Ok(C0Estimate {
                c0: prev,
                error: tail_err + prev_err,
                cutoff,
                tail_coefficient: prev_a,
                quadrature_error: prev_err,
            });
        }
        if next_cutoff > MAX_C0_CUTOFF {
            return Err(Error::ToleranceNotMet {
                requested: tol,
                achieved: tail_err + qerr,
                context: format!("c0 tail did not settle by cutoff {next_cutoff}"),
            });
        }
        cutoff = next_cutoff;
        (prev, prev_err, prev_a) = (val, qerr, a);
    }
}

/// Plain `∫₀^X` of the integrand, without tail correction.
pub fn c0_partial(cutoff: f64, tol: f64) -> Result<f64> {
    let kernel = LimitKernel::default();
    let panels = (cutoff / PI).ceil() as usize;
    let mut breaks: Vec<f64> = (0..panels).map(|k| k as f64 * PI).collect();
    breaks.push(cutoff);
    let r = integrate_with_breaks(
        |x| if x == 0.0 { -1.0 } else { kernel.c0_integrand(x).unwrap_or(f64::NAN) },
        &breaks,
        QuadOptions::abs(tol),
    )?;
    Ok(r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CEstimate {
    pub c: f64,
    pub error: f64,
    pub c0: C0Estimate,
}

/// `c = 4c₀/(3π) + 2/√3`.
pub fn compute_c(tol: f64) -> Result<CEstimate> {
    // c's error is 4/(3π) ≈ 0.42 times c₀'s
    let c0 = compute_c0(tol)?;
    Ok(CEstimate {
        c: c_from_c0(c0.c0),
        error: 4.0 / (3.0 * PI) * c0.error,
        c0,
    })
}

pub fn c_from_c0(c0: f64) -> f64 {
    4.0 * c0 / (3.0 * PI) + 2.0 / 3f64.sqrt()
}

pub fn c0_from_c(c: f64) -> f64 {
    (c - 2.0 / 3f64.sqrt()) * 3.0 * PI / 4.0
}

/// `|f_N(x) - g(x)|` with `f_N(x) = r_N(x/m)`.
pub fn scaled_covariance_error(n: usize, x: f64) -> Result<f64> {
    let m = n as f64 + 0.5;
    if !(x >= 0.0 && x <= PI * m) {
        return Err(Error::invalid(format!("x = {x} outside [0, πm]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let f = QuallsCovariance::new(n).triple(x / m).0;
    Ok((f - x.sin() / x).abs())
}

/// `M(x) - λ'` for the scaled finite-N process; tends to `c0_integrand/3`.
pub fn scaled_kernel_offset(n: usize, x: f64) -> Result<f64> {
    let model = CovarianceModel::scaled(n);
    let k = kac_rice_terms_with(&model, x, KAC_RICE_SERIES_CUTOFF)?;
    Ok(k.value() - model.lambda2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DD;

    /// `(g, g', g'')` in double-double arithmetic from the closed forms.
    fn g_triple_dd(x: f64) -> (f64, f64, f64) {
        let xd = DD::new(x);
        let (s, c) = xd.sin_cos();
        let g = s / xd;
        let g1 = (xd * c - s) / (xd * xd);
        let g2 = ((DD::new(2.0) - xd * xd) * s - DD::new(2.0) * xd * c) / (xd * xd * xd);
        (g.to_f64(), g1.to_f64(), g2.to_f64())
    }

    #[test]
    fn g_at_special_points() {
        assert_eq!(g_triple(0.0), (1.0, 0.0, -1.0 / 3.0));
        let (g, g1, _) = g_triple(PI);
        assert!(g.abs() < 1e-15);
        assert!((g1 + 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn series_matches_high_precision_direct() {
        let x = 1e-2 * (1.0 - 1e-9);
        let a = g_triple(x);
        let b = g_triple_dd(x);
        assert!((a.0 - b.0).abs() < 1e-13);
        assert!((a.1 - b.1).abs() < 1e-13);
        assert!((a.2 - b.2).abs() < 1e-13);
    }

    #[test]
    fn r_star_near_origin() {
        // numerator and denominator both expand to x⁴/135
        let r = r_star(1e-4).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
        assert!((r_star(0.1).unwrap() - (1.0 - 0.01 / 70.0)).abs() < 1e-6);
    }

    #[test]
    fn r_star_decay_and_bound() {
        // R* = -3 sin x/x + O(1/x²)
        for &x in &[20.0, 50.0, 200.0] {
            let lead = -3.0 * f64::sin(x) / x;
            assert!((r_star(x).unwrap() - lead).abs() < 10.0 / (x * x), "{x}");
        }
        for k in 1..=100_000 {
            let x = k as f64 * 2e-3;
            assert!(r_star(x).unwrap().abs() <= 1.0);
        }
    }

    #[test]
    fn integrand_limits_and_continuity() {
        assert!((c0_integrand(1e-6).unwrap() + 1.0).abs() < 1e-5);
        // the two evaluation routes agree where they meet
        let k = LimitKernel::default();
        let x = k.ratio_crossover();
        let series = LimitKernel::with_crossovers(SINC_SERIES_CUTOFF, 2.0 * x);
        let direct = LimitKernel::with_crossovers(SINC_SERIES_CUTOFF, 0.0);
        assert!((series.c0_integrand(x).unwrap() - direct.c0_integrand(x).unwrap()).abs() < 1e-9);
        assert!((series.r_star(x).unwrap() - direct.r_star(x).unwrap()).abs() < 1e-9);
        // and the integrand has no jump there beyond its own slope
        let lo = c0_integrand(x * (1.0 - 1e-3)).unwrap();
        let hi = c0_integrand(x * (1.0 + 1e-3)).unwrap();
        let lo2 = c0_integrand(x * (1.0 - 2e-3)).unwrap();
        let hi2 = c0_integrand(x * (1.0 + 2e-3)).unwrap();
        assert!(((hi2 - lo2) / 2.0 - (hi - lo)).abs() < 1e-9);
    }

    /// Independent route to `c₀`: the integrand from closed forms (double-double
    /// below x = 1), composite Simpson on `[0, X]`, and Richardson elimination
    /// of the `A/X + B/X³` tail over three cutoffs.
    fn c0_oracle() -> f64 {
        fn integrand(x: f64) -> f64 {
            let (g, g1, g2) = if x < 1.0 {
                g_triple_dd(x)
            } else {
                SincCovariance::direct(x)
            };
            let (q, d) = if x < 1.0 {
                let xd = DD::new(x);
                let (s, c) = xd.sin_cos();
                let gd = s / xd;
                let g1d = (xd * c - s) / (xd * xd);
                let q = DD::ONE - gd * gd;
                (q, q * (1.0 / 3.0) - g1d * g1d)
            } else {
                let q = 1.0 - g * g;
                (DD::new(q), DD::new(q / 3.0 - g1 * g1))
            };
            let numer = d.to_f64();
            let q = q.to_f64();
            let rho = (g2 * q + g * g1 * g1) / numer;
            let rho = if x < 1.0 {
                // the closed-form numerator of ρ also cancels at small x
                let xd = DD::new(x);
                let (s, c) = xd.sin_cos();
                let gd = s / xd;
                let g1d = (xd * c - s) / (xd * xd);
                let g2d = ((DD::new(2.0) - xd * xd) * s - DD::new(2.0) * xd * c) / (xd * xd * xd);
                ((g2d * (DD::ONE - gd * gd) + gd * g1d * g1d) / d).to_f64()
            } else {
                rho
            };
            let rho = rho.clamp(-1.0, 1.0);
            3.0 * numer / q.powf(1.5) * ((1.0 - rho * rho).sqrt() + rho * rho.asin()) - 1.0
        }
        let simpson = |end: f64| {
            let n = (end / 2e-3).round() as usize * 2;
            let h = end / n as f64;
            let mut acc = -1.0 + integrand(end);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * integrand(k as f64 * h);
            }
            acc * h / 3.0
        };
        let xs = [100.0 * PI, 200.0 * PI, 400.0 * PI];
        let v: Vec<f64> = xs.iter().map(|&x| simpson(x)).collect();
        // v_i = c₀ - A/x_i - B/x_i³: solve the 3×3 system for c₀
        let m = nalgebra::Matrix3::from_fn(|i, j| match j {
            0 => 1.0,
            1 => -1.0 / xs[i],
            _ => -xs[i].powi(-3),
        });
        let sol = m.lu().solve(&nalgebra::Vector3::new(v[0], v[1], v[2])).unwrap();
        sol[0]
    }

    /// Frozen output of `c0_oracle`.
    const C0_ORACLE: f64 = -1.405330648288385;

    #[test]
    fn c0_oracle_reproduces() {
        assert!((c0_oracle() - C0_ORACLE).abs() < 1e-12);
    }

    #[test]
    fn c0_value() {
        let est = compute_c0(1e-6).unwrap();
        assert!(est.error <= 1e-6);
        assert!((est.c0 - C0_ORACLE).abs() < 1e-8);
        // back-solved from c ≈ 0.55826
        assert!((est.c0 - c0_from_c(0.55826)).abs() < 2e-3);
        assert!((est.tail_coefficient - 1.0).abs() < 1e-3);
        let tighter = compute_c0(5e-7).unwrap();
        assert!(tighter.error <= 5e-7);
        assert!((tighter.c0 - est.c0).abs() < 1e-6);
    }

    #[test]
    fn partial_integrals_follow_tail() {
        let a = c0_partial(50.0, 1e-9).unwrap();
        let b = c0_partial(200.0, 1e-9).unwrap();
        assert!((b - a).abs() < 0.03);
    }

    #[test]
    fn c_value() {
        let c = compute_c(1e-6).unwrap();
        assert!((c.c - 0.55826).abs() < 2e-4);
        assert!(c.c > 0.0 && c.c < 2.0 / 3f64.sqrt());
    }

    #[test]
    fn scaled_covariance_convergence() {
        assert_eq!(scaled_covariance_error(100, 0.0).unwrap(), 0.0);
        assert!(scaled_covariance_error(100, 1.0).unwrap() < 10.0 / 100.5);
        let e1 = scaled_covariance_error(200, 2.0).unwrap();
        let e2 = scaled_covariance_error(400, 2.0).unwrap();
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }
}
