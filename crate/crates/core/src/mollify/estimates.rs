//! Numerical checks of the closeness of `(Y_N, Y_N^M)`.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{Matrix2, Matrix4};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::kac_rice::kernel_bracket;
use crate::analytic::ConditionalMatrixBundle;
use crate::ensembles::SpectralDesign;
use crate::error::{Error, Result};

use super::joint::{JointCovariance, DEFAULT_TAIL_EPS};
use super::mollifier::Mollifier;

/// `S_M` on the circle of half-length `πm`.
pub fn build_mollifier(big_m: f64, m: f64) -> Result<Mollifier> {
    Mollifier::new(big_m, m)
}

/// `Ŝ_M(n)` in the orthonormal basis `e^{inx/m}/√(2πm)`.
pub fn s_m_hat(n: i64, mollifier: &Mollifier) -> f64 {
    mollifier.fourier(n)
}

/// Which covariance of the coupled pair to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Which {
    /// `r_N^M = r_N · S_M`.
    Mollified,
    /// `r_N^{M,0}(x) = E[Y_N(y) Y_N^M(y + x)]`.
    Joint,
}

/// Derivative `order` (0, 1 or 2) of `r^M` or `r^{M,0}` at `x ∈ [-πm, πm]`.
pub fn mollified_cov(cov: &JointCovariance, which: Which, x: f64, order: usize) -> Result<f64> {
    let half = PI * cov.m();
    if !(x.abs() <= half * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!("lag {x} outside [-πm, πm] with πm = {half}")));
    }
    if order > 2 {
        return Err(Error::invalid(format!("derivative order {order} not available")));
    }
    if which == Which::Mollified && cov.tail_mass() > DEFAULT_TAIL_EPS {
        return Err(Error::ToleranceNotMet {
            requested: DEFAULT_TAIL_EPS,
            achieved: cov.tail_mass(),
            context: "mollified spectrum truncated above its tail bound".into(),
        });
    }
    let t = match which {
        Which::Mollified => cov.mollified(x),
        Which::Joint => cov.joint(x),
    };
    Ok([t.0, t.1, t.2][order])
}

/// Squared `L²(-πm, πm)` distances between the covariances and their
/// derivatives, with sup-norm and Lipschitz data of the differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Closeness {
    pub degree: usize,
    pub width: f64,
    pub step: f64,
    /// `‖(r^M - r)^{(k)}‖²` for `k = 0, 1, 2`.
    pub mollified_sq: [f64; 3],
    /// `‖(r^{M,0} - r)^{(k)}‖²` for `k = 0, 1, 2`.
    pub joint_sq: [f64; 3],
    /// `‖r^M - r‖_∞` and `‖r^{M,0} - r‖_∞` on the grid.
    pub sup: [f64; 2],
    /// Largest slope of `r^M - r` and `r^{M,0} - r` on the grid.
    pub lipschitz: [f64; 2],
}

impl L2Closeness {
    pub fn mollified_norms(&self) -> [f64; 3] {
        self.mollified_sq.map(f64::sqrt)
    }

    pub fn joint_norms(&self) -> [f64; 3] {
        self.joint_sq.map(f64::sqrt)
    }
}

/// Grid step resolving 16 points per shortest oscillation `2πm/N` and 64 across `M`.
pub fn l2_step(n: usize, m: f64, big_m: f64) -> f64 {
    (2.0 * PI * m / (16.0 * n as f64)).min(big_m / 64.0)
}

pub fn l2_closeness_report(n: usize, big_m: f64) -> Result<L2Closeness> {
    let cov = JointCovariance::new(n, big_m)?;
    Ok(l2_closeness(&cov))
}

/// Composite Simpson over `[0, πm]`, doubled by evenness.
pub fn l2_closeness(cov: &JointCovariance) -> L2Closeness {
    let m = cov.m();
    let half = PI * m;
    let target = l2_step(cov.degree(), m, cov.width());
    let mut panels = (half / target).ceil() as usize;
    panels += panels % 2;
    let h = half / panels as f64;
    let rows: Vec<[f64; 6]> = (0..=panels)
        .into_par_iter()
        .map(|i| {
            let x = if i == panels { half } else { i as f64 * h };
            let b = cov.base_triple(x);
            let mo = cov.mollified(x);
            let jo = cov.joint(x);
            [mo.0 - b.0, mo.1 - b.1, mo.2 - b.2, jo.0 - b.0, jo.1 - b.1, jo.2 - b.2]
        })
        .collect();
    let mut sq = [0.0; 6];
    for (i, row) in rows.iter().enumerate() {
        let w = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for (s, v) in sq.iter_mut().zip(row) {
            *s += w * v * v;
        }
    }
    let sq = sq.map(|s| 2.0 * s * h / 3.0);
    let sup = [0, 3].map(|k| rows.iter().map(|r| r[k].abs()).fold(0.0, f64::max));
    let lipschitz = [0, 3].map(|k| {
        rows.windows(2)
            .map(|w| ((w[1][k] - w[0][k]) / h).abs())
            .fold(0.0, f64::max)
    });
    L2Closeness {
        degree: cov.degree(),
        width: cov.width(),
        step: h,
        mollified_sq: [sq[0], sq[1], sq[2]],
        joint_sq: [sq[3], sq[4], sq[5]],
        sup,
        lipschitz,
    }
}

/// Covariance matrices of the mollified vectors `W₁`, `W₂` at lag `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedMatrices {
    /// `Σ_{N,M}` and its reduction, from `r^M`.
    pub mollified: ConditionalMatrixBundle,
    /// Covariance of `(Y_N(0), Y_N^M(x), Y_N'(0), Y_N^M'(x))`.
    pub sigma_joint: Matrix4<f64>,
    /// Conditional covariance of `(Y_N'(0), Y_N^M'(x))` given both values vanish.
    pub omega_joint: Matrix2<f64>,
}

pub fn conditional_matrices(cov: &JointCovariance, x: f64) -> Result<MollifiedMatrices> {
    if x == 0.0 {
        return Err(Error::invalid("conditional matrices need a nonzero lag"));
    }
    let (r, r1, r2) = cov.mollified(x);
    let lambda_m = cov.lambda2_mollified();
    let mollified = ConditionalMatrixBundle::from_triple(r, r1, r2, lambda_m)?;

    let (q, q1, q2) = cov.joint(x);
    let lambda = cov.lambda2_base();
    #[rustfmt::skip]
    let sigma_joint = Matrix4::new(
        1.0, q, 0.0, q1,
        q, 1.0, -q1, 0.0,
        0.0, -q1, lambda, -q2,
        q1, 0.0, -q2, lambda_m,
    );
    let one_minus = 1.0 - q * q;
    if !(one_minus > 0.0) {
        return Err(Error::invariant(format!("joint covariance |r^(M,0)({x})| = {} reaches 1", q.abs())));
    }
    let d = q1 * q1 / one_minus;
    let off = -q2 - q * d;
    let omega_joint = Matrix2::new(lambda - d, off, off, lambda_m - d);
    if !(omega_joint.determinant() > 0.0) {
        return Err(Error::invariant(format!("Ω_(N,M,0) singular at x = {x}")));
    }
    Ok(MollifiedMatrices {
        mollified,
        sigma_joint,
        omega_joint,
    })
}

/// Monte Carlo `E(Y_N^M(x) - Y_N(x))²` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathDistance {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    /// The exact value `2 - 2 r^{M,0}(0)`.
    pub exact: f64,
}

pub fn path_l2_distance(n: usize, big_m: f64, x: f64, trials: u64, seed: u64) -> Result<PathDistance> {
    if trials < 2 {
        return Err(Error::invalid("need at least two trials"));
    }
    let design = SpectralDesign::new(n, big_m, DEFAULT_TAIL_EPS)?;
    let m = design.m();
    let sq: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let (base, moll) = design.sample(seed, k);
            let g = base.gaussians();
            let (ab, am) = (base.amplitudes(), moll.amplitudes());
            let mut diff = (am[0] - ab[0]) * g[0].0;
            for j in 1..am.len().max(ab.len()) {
                let w = am.get(j).copied().unwrap_or(0.0) - ab.get(j).copied().unwrap_or(0.0);
                let (s, c) = (j as f64 * x / m).sin_cos();
                diff += w * (g[j].0 * c + g[j].1 * s);
            }
            diff * diff
        })
        .collect();
    let nt = trials as f64;
    let mean = sq.iter().sum::<f64>() / nt;
    let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nt - 1.0);
    Ok(PathDistance {
        mean,
        std_error: (var / nt).sqrt(),
        trials,
        exact: 2.0 - 2.0 * design.joint().joint(0.0).0,
    })
}

/// `Cor(|V₁|, |V₂|)` for unit gaussians with correlation `ρ`.
pub fn abs_correlation(rho: f64) -> f64 {
    let e = FRAC_2_PI * kernel_bracket(rho);
    (e - FRAC_2_PI) / (1.0 - FRAC_2_PI)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuzickReport {
    pub rho: Vec<f64>,
    pub correlation: Vec<f64>,
    /// Largest excursion of the correlation outside `[0, ρ²]`.
    pub max_violation: f64,
}

/// Check `0 ≤ Cor(|V₁|, |V₂|) ≤ ρ²` on the grid.
pub fn cuzick_correlation_check(rho_grid: &[f64]) -> Result<CuzickReport> {
    if let Some(r) = rho_grid.iter().find(|r| !(r.abs() <= 1.0)) {
        return Err(Error::invalid(format!("correlation {r} outside [-1, 1]")));
    }
    let correlation: Vec<f64> = rho_grid.iter().map(|&r| abs_correlation(r)).collect();
    let max_violation = rho_grid
        .iter()
        .zip(&correlation)
        .map(|(r, c)| (-c).max(c - r * r).max(0.0))
        .fold(0.0, f64::max);
    if max_violation > 1e-10 {
        return Err(Error::invariant(format!("absolute-value correlation exceeds [0, ρ²] by {max_violation:e}")));
    }
    Ok(CuzickReport {
        rho: rho_grid.to_vec(),
        correlation,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_with_breaks, QuadOptions};
    use crate::rng::{normal, trial_stream, Purpose};
    use rustfft::{num_complex::Complex, FftPlanner};

    fn rel_opts() -> QuadOptions {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 20_000,
        }
    }

    fn knots(big_m: f64) -> Vec<f64> {
        (0..=4).map(|k| 2.0 * k as f64 * big_m).collect()
    }

    #[test]
    fn support_and_normalization() {
        let s = build_mollifier(5.0, 200.5).unwrap();
        assert!((s.value(0.0) - 1.0).abs() < 1e-12);
        assert_eq!(s.value(40.0), 0.0);
        assert!(s.value(40.0 - 0.05) > 0.0);
        assert!(build_mollifier(0.0, 10.5).is_err());
        assert!(build_mollifier(PI * 10.5, 10.5).is_err());
    }

    #[test]
    fn integral_matches_grid_convolution() {
        // eight-fold convolution of the trapezoid-weighted box on [-8, 8)
        let len = 1usize << 16;
        let h = 16.0 / len as f64;
        let half_box = (1.0 / h).round() as usize;
        let mut b = vec![Complex::new(0.0, 0.0); len];
        for j in 0..=half_box {
            let w = if j == half_box { 0.5 * h } else { h };
            b[j].re = w;
            if j > 0 {
                b[len - j].re = w;
            }
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(len).process(&mut b);
        for v in b.iter_mut() {
            *v = v.powi(8);
        }
        planner.plan_fft_inverse(len).process(&mut b);
        let total: f64 = b.iter().map(|v| v.re).sum();
        let c_prime = total / b[0].re * h;

        let big_m = 3.0;
        let s = build_mollifier(big_m, 50.5).unwrap();
        let q = integrate_with_breaks(|x| s.value(x), &knots(big_m), QuadOptions::abs(1e-13)).unwrap();
        let integral = 2.0 * q.value;
        assert!((integral / (c_prime * big_m) - 1.0).abs() < 1e-6, "{integral} vs {}", c_prime * big_m);
    }

    #[test]
    fn fourier_nonnegative_and_decaying() {
        let s = build_mollifier(10.0, 400.5).unwrap();
        assert!((-10_000..=10_000).all(|n| s_m_hat(n, &s) >= 0.0));
        for &n in &[2_000.0, 5_000.0] {
            let e = s.fourier_envelope(2.0 * n) / s.fourier_envelope(n);
            assert!((e - 2f64.powi(-8)).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_matches_numerical_transform() {
        let (big_m, m) = (5.0, 50.5);
        let s = build_mollifier(big_m, m).unwrap();
        let br = knots(big_m);
        for &n in &[0i64, 3, 17] {
            let f = |x: f64| s.value(x) * (n as f64 * x / m).cos();
            let q = integrate_with_breaks(f, &br, rel_opts()).unwrap();
            let numeric = 2.0 * q.value / (2.0 * PI * m).sqrt();
            let closed = s_m_hat(n, &s);
            assert!((numeric / closed - 1.0).abs() < 1e-8, "n={n}: {numeric} vs {closed}");
        }
    }

    #[test]
    fn mollified_fourier_consistency() {
        let (n, big_m) = (40usize, 4.0);
        let cov = JointCovariance::new(n, big_m).unwrap();
        let m = cov.m();
        let br: Vec<f64> = (0..=16).map(|k| k as f64 * big_m / 2.0).collect();
        let extra = (m / big_m).ceil() as i64;
        for &k in &[0i64, 1, n as i64 / 2, n as i64, n as i64 + extra] {
            let f = |x: f64| cov.mollified(x).0 * (k as f64 * x / m).cos();
            let q = integrate_with_breaks(f, &br, rel_opts()).unwrap();
            let numeric = 2.0 * q.value / (2.0 * PI * m).sqrt();
            assert!((numeric - cov.rhat_mollified(k)).abs() < 1e-7, "k={k}");
            let j = cov.rhat_joint(k);
            let prod = cov.rhat_base(k) * cov.rhat_mollified(k);
            assert!((j * j - prod).abs() <= 4.0 * f64::EPSILON * prod);
        }
    }

    #[test]
    fn covariance_values() {
        let cov = JointCovariance::new(50, 4.0).unwrap();
        assert!((mollified_cov(&cov, Which::Mollified, 0.0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mollified_cov(&cov, Which::Mollified, 32.0, 0).unwrap(), 0.0);
        assert_eq!(mollified_cov(&cov, Which::Mollified, -60.0, 1).unwrap(), 0.0);
        let j0 = mollified_cov(&cov, Which::Joint, 0.0, 0).unwrap();
        let unit = 1.0 / (2.0 * PI * cov.m()).sqrt();
        let direct: f64 = (1..=50).map(|k| 2.0 * unit * cov.rhat_joint(k)).sum();
        assert!(j0 <= 1.0 && (j0 - direct).abs() < 1e-6);
        assert!(mollified_cov(&cov, Which::Joint, 200.0, 0).is_err());
        assert!(mollified_cov(&cov, Which::Joint, 1.0, 3).is_err());
    }

    #[test]
    fn l2_norms_match_parseval() {
        let cov = JointCovariance::new(60, 5.0).unwrap();
        let rep = l2_closeness(&cov);
        let m = cov.m();
        for d in 0..3 {
            let mut moll = 0.0;
            let mut joint = 0.0;
            for k in -(cov.truncation() as i64)..=cov.truncation() as i64 {
                let w = (k as f64 / m).powi(2 * d as i32);
                moll += w * (cov.rhat_mollified(k) - cov.rhat_base(k)).powi(2);
                joint += w * (cov.rhat_joint(k) - cov.rhat_base(k)).powi(2);
            }
            assert!((rep.mollified_sq[d] / moll - 1.0).abs() < 1e-6, "d={d}");
            assert!((rep.joint_sq[d] / joint - 1.0).abs() < 1e-6, "d={d}");
            assert!(rep.mollified_sq[d] > 0.0 && rep.joint_sq[d] > 0.0);
        }
    }

    #[test]
    fn l2_decay_in_width() {
        let reps: Vec<L2Closeness> = [5.0, 10.0, 20.0, 40.0]
            .iter()
            .map(|&w| l2_closeness_report(400, w).unwrap())
            .collect();
        for p in reps.windows(2) {
            let ratio = p[0].mollified_sq[0] / p[1].mollified_sq[0];
            assert!((1.5..=2.8).contains(&ratio), "{ratio}");
        }
        // the cross covariance stays under its M^(-1/4) envelope
        let c = reps[0].joint_norms()[0] * reps[0].width.powf(0.25);
        for r in &reps {
            let n = r.joint_norms()[0];
            assert!(n > 0.0 && n <= c * r.width.powf(-0.25));
        }
    }

    #[test]
    fn sup_norm_from_l2() {
        for &(n, w) in &[(50usize, 3.0), (200, 8.0)] {
            let rep = l2_closeness_report(n, w).unwrap();
            for k in 0..2 {
                let l2 = [rep.mollified_sq[0], rep.joint_sq[0]][k].sqrt();
                let bound = 2.0 * rep.lipschitz[k].cbrt() * l2.powf(2.0 / 3.0);
                assert!(rep.sup[k] <= bound, "{} > {bound}", rep.sup[k]);
            }
        }
    }

    #[test]
    fn lipschitz_uniform_in_degree() {
        let slopes: Vec<[f64; 3]> = [50usize, 200, 800]
            .iter()
            .map(|&n| {
                let cov = JointCovariance::new(n, 6.0).unwrap();
                let half = PI * cov.m();
                let h = 0.05;
                let pts = (half / h) as usize;
                let mut s = [0.0f64; 3];
                let mut prev = [cov.base_triple(0.0).0, cov.mollified(0.0).0, cov.joint(0.0).0];
                for i in 1..=pts {
                    let x = i as f64 * h;
                    let cur = [cov.base_triple(x).0, cov.mollified(x).0, cov.joint(x).0];
                    for k in 0..3 {
                        s[k] = s[k].max(((cur[k] - prev[k]) / h).abs());
                    }
                    prev = cur;
                }
                s
            })
            .collect();
        let a = slopes.iter().flatten().copied().fold(0.0, f64::max);
        assert!(a < 1.0, "{a}");
        let lo = slopes.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.8 * a, "{lo} vs {a}");
    }

    #[test]
    fn conditional_matrices_consistent() {
        let cov = JointCovariance::new(50, 10.0).unwrap();
        for &x in &[0.3, 2.0, 7.5, -4.0] {
            let mm = conditional_matrices(&cov, x).unwrap();
            let s = mm.mollified.sigma;
            assert_eq!(s, s.transpose());
            assert!(s.symmetric_eigen().eigenvalues.min() > -1e-12);
            // closed form of Ω against a generic Schur complement
            let sj = mm.sigma_joint;
            let a = sj.fixed_view::<2, 2>(0, 0).into_owned();
            let b = sj.fixed_view::<2, 2>(0, 2).into_owned();
            let c = sj.fixed_view::<2, 2>(2, 2).into_owned();
            let schur = c - b.transpose() * a.try_inverse().unwrap() * b;
            assert!((schur - mm.omega_joint).abs().max() < 1e-10);
            assert!(mm.omega_joint[(0, 0)] <= cov.lambda2_base());
            assert!(mm.omega_joint[(1, 1)] <= cov.lambda2_mollified());
            assert!(sj.symmetric_eigen().eigenvalues.min() > -1e-12);
        }
        assert!(conditional_matrices(&cov, 0.0).is_err());
    }

    #[test]
    fn small_lag_determinant_envelope() {
        let cov = JointCovariance::new(50, 10.0).unwrap();
        let ratios: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&x: &f64| {
                let b = conditional_matrices(&cov, x).unwrap().mollified;
                b.det_factorized() / x.powi(8)
            })
            .collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo < 1.5, "{ratios:?}");
    }

    #[test]
    fn path_distance_decays_and_is_stationary() {
        let a = path_l2_distance(100, 10.0, 0.0, 10_000, 3).unwrap();
        let b = path_l2_distance(100, 40.0, 0.0, 10_000, 3).unwrap();
        let c = path_l2_distance(100, 10.0, 3.0, 10_000, 5).unwrap();
        assert!(a.mean >= 0.0 && b.mean >= 0.0);
        assert!(b.mean + 4.0 * b.std_error < a.mean - 4.0 * a.std_error);
        let se = (a.std_error.powi(2) + c.std_error.powi(2)).sqrt();
        assert!((a.mean - c.mean).abs() < 4.0 * se);
        assert!((a.mean - a.exact).abs() < 4.0 * a.std_error);
    }

    #[test]
    fn cuzick_bounds() {
        assert!(abs_correlation(0.0).abs() < 1e-15);
        assert!((abs_correlation(1.0) - 1.0).abs() < 1e-15);
        let grid: Vec<f64> = (-100..=100).map(|i| i as f64 / 100.0).collect();
        let rep = cuzick_correlation_check(&grid).unwrap();
        assert!(rep.max_violation <= 1e-10);
        assert!(cuzick_correlation_check(&[1.5]).is_err());

        // Monte Carlo at ρ = 0.6 with 10⁶ pairs
        let rho: f64 = 0.6;
        let s = (1.0 - rho * rho).sqrt();
        let pairs = 1_000_000;
        let mut rng = trial_stream(21, Purpose::Pairs, 0);
        let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..pairs {
            let z1: f64 = normal(&mut rng);
            let z2 = rho * z1 + s * normal(&mut rng);
            let (a, b) = (z1.abs(), z2.abs());
            s1 += a;
            s2 += b;
            s11 += a * a;
            s22 += b * b;
            s12 += a * b;
        }
        let n = pairs as f64;
        let cov = s12 / n - s1 * s2 / (n * n);
        let cor = cov / ((s11 / n - (s1 / n).powi(2)) * (s22 / n - (s2 / n).powi(2))).sqrt();
        let exact = abs_correlation(rho);
        assert!((0.0..=rho * rho).contains(&exact));
        // the sample correlation has standard error below 1/√n
        assert!((cor - exact).abs() < 4.0 / n.sqrt(), "{cor} vs {exact}");
    }
}
