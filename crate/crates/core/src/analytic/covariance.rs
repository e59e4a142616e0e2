//! Covariance functions of the processes under study, with first and second
//! derivatives.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::Serialize;

use crate::mollify::JointCovariance;
use crate::series::{EvenSeries, TERMS};

/// Below this value of `m·|t|` the exact covariance is evaluated from its
/// Taylor series; the closed form loses accuracy in `r''` there.
const QUALLS_SERIES_CUTOFF: f64 = 0.5;

/// Below this `|x|` the sinc kernel is evaluated from its Taylor series.
pub const SINC_SERIES_CUTOFF: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    ExactXN,
    ScaledFN,
    SincG,
    MollifiedRNM,
    JointRNM0,
}

/// `(1/N) Σ_{n≤N} (n·scale)^{2k}` for `k < TERMS`.
fn power_moments(n: usize, scale: f64) -> Vec<f64> {
    let mut mu = vec![0.0; TERMS];
    for j in 1..=n {
        let x2 = (j as f64 * scale).powi(2);
        let mut p = 1.0;
        for m in mu.iter_mut() {
            *m += p;
            p *= x2;
        }
    }
    mu.iter().map(|v| v / n as f64).collect()
}

fn qualls_series(n: usize, scale: f64) -> EvenSeries {
    let mu = power_moments(n, scale);
    let mut fact = 1.0;
    let mut coeffs = Vec::with_capacity(TERMS);
    for (k, m) in mu.iter().enumerate() {
        if k > 0 {
            fact *= (2 * k - 1) as f64 * (2 * k) as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(sign * m / fact);
    }
    EvenSeries::new(coeffs)
}

/// Normalized Dirichlet kernel `(1/N) Σ cos(nt)` in the variable `t`.
#[derive(Debug, Clone)]
pub struct QuallsCovariance {
    n: usize,
    m: f64,
    series: EvenSeries,
}

impl QuallsCovariance {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "degree must be positive");
        QuallsCovariance {
            n,
            m: n as f64 + 0.5,
            series: qualls_series(n, 1.0),
        }
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn series(&self) -> &EvenSeries {
        &self.series
    }

    /// Fold `t` into `[0, π]`, returning the sign picked up by odd derivatives.
    fn fold(t: f64) -> (f64, f64) {
        let mut u = t.rem_euclid(TAU);
        if u > PI {
            u = TAU - u;
            (u, -1.0)
        } else {
            (u, 1.0)
        }
    }

    /// Closed Dirichlet form; valid away from `t ≡ 0 (mod 2π)`.
    pub fn closed_form(&self, t: f64) -> (f64, f64, f64) {
        let m = self.m;
        let (sh, ch) = (0.5 * t).sin_cos();
        let (s, c) = (m * t).sin_cos();
        let d = s / sh;
        let n1 = m * c * sh - 0.5 * s * ch;
        let d1 = n1 / (sh * sh);
        let d2 = s * (0.25 - m * m) / sh - n1 * ch / (sh * sh * sh);
        let k = 1.0 / (2.0 * self.n as f64);
        ((d - 1.0) * k, d1 * k, d2 * k)
    }

    /// Direct harmonic sum; `O(N)` per call, used as a reference.
    pub fn direct_sum(&self, t: f64) -> (f64, f64, f64) {
        let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
        for j in 1..=self.n {
            let jf = j as f64;
            let (s, c) = (jf * t).sin_cos();
            r += c;
            r1 -= jf * s;
            r2 -= jf * jf * c;
        }
        let k = 1.0 / self.n as f64;
        (r * k, r1 * k, r2 * k)
    }

    pub fn triple(&self, t: f64) -> (f64, f64, f64) {
        let (u, sign) = Self::fold(t);
        let (r, r1, r2) = if self.m * u < QUALLS_SERIES_CUTOFF {
            self.series.triple(u)
        } else {
            self.closed_form(u)
        };
        (r, sign * r1, r2)
    }

    pub fn one_minus_r(&self, t: f64) -> f64 {
        let (u, _) = Self::fold(t);
        if self.m * u < QUALLS_SERIES_CUTOFF {
            self.series.one_minus(u)
        } else {
            1.0 - self.closed_form(u).0
        }
    }

    pub fn lambda2(&self) -> f64 {
        let n = self.n as f64;
        (n + 1.0) * (2.0 * n + 1.0) / 6.0
    }
}

/// `f_N(x) = r(x/m)`, the covariance of `X_N` in the scaled variable.
#[derive(Debug, Clone)]
pub struct ScaledQualls {
    inner: QuallsCovariance,
    series: EvenSeries,
}

impl ScaledQualls {
    pub fn new(n: usize) -> Self {
        let inner = QuallsCovariance::new(n);
        let series = qualls_series(n, 1.0 / inner.m);
        ScaledQualls { inner, series }
    }

    pub fn degree(&self) -> usize {
        self.inner.n
    }

    pub fn m(&self) -> f64 {
        self.inner.m
    }

    pub fn series(&self) -> &EvenSeries {
        &self.series
    }

    pub fn triple(&self, x: f64) -> (f64, f64, f64) {
        let m = self.inner.m;
        let (r, r1, r2) = self.inner.triple(x / m);
        (r, r1 / m, r2 / (m * m))
    }

    pub fn one_minus_r(&self, x: f64) -> f64 {
        self.inner.one_minus_r(x / self.inner.m)
    }

    /// `(1 + 1/(2m))/3`.
    pub fn lambda2(&self) -> f64 {
        (1.0 + 0.5 / self.inner.m) / 3.0
    }
}

/// The scaling limit `g(x) = sin(x)/x`.
#[derive(Debug, Clone)]
pub struct SincCovariance {
    series: EvenSeries,
    crossover: f64,
}

impl Default for SincCovariance {
    fn default() -> Self {
        Self::with_crossover(SINC_SERIES_CUTOFF)
    }
}

impl SincCovariance {
    pub fn with_crossover(crossover: f64) -> Self {
        let mut coeffs = vec![1.0];
        let mut fact = 1.0;
        for k in 1..TERMS {
            fact *= (2 * k) as f64 * (2 * k + 1) as f64;
            coeffs.push(if k % 2 == 0 { 1.0 } else { -1.0 } / fact);
        }
        SincCovariance {
            series: EvenSeries::new(coeffs),
            crossover,
        }
    }

    pub fn series(&self) -> &EvenSeries {
        &self.series
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    pub fn direct(x: f64) -> (f64, f64, f64) {
        let (s, c) = x.sin_cos();
        let g = s / x;
        let g1 = (x * c - s) / (x * x);
        let g2 = ((2.0 - x * x) * s - 2.0 * x * c) / (x * x * x);
        (g, g1, g2)
    }

    pub fn triple(&self, x: f64) -> (f64, f64, f64) {
        if x.abs() < self.crossover {
            self.series.triple(x)
        } else {
            Self::direct(x)
        }
    }

    pub fn one_minus_r(&self, x: f64) -> f64 {
        // the series stays accurate well past the value crossover
        if x.abs() < 0.5 {
            self.series.one_minus(x)
        } else {
            1.0 - x.sin() / x
        }
    }

    pub fn lambda2(&self) -> f64 {
        1.0 / 3.0
    }
}

/// A covariance function together with its first two derivatives.
#[derive(Debug, Clone)]
pub enum CovarianceModel {
    ExactXN(QuallsCovariance),
    ScaledFN(ScaledQualls),
    SincG(SincCovariance),
    MollifiedRNM(Arc<JointCovariance>),
    JointRNM0(Arc<JointCovariance>),
}

impl CovarianceModel {
    pub fn exact(n: usize) -> Self {
        CovarianceModel::ExactXN(QuallsCovariance::new(n))
    }

    pub fn scaled(n: usize) -> Self {
        CovarianceModel::ScaledFN(ScaledQualls::new(n))
    }

    pub fn sinc() -> Self {
        CovarianceModel::SincG(SincCovariance::default())
    }

    pub fn kind(&self) -> CovarianceKind {
        match self {
            CovarianceModel::ExactXN(_) => CovarianceKind::ExactXN,
            CovarianceModel::ScaledFN(_) => CovarianceKind::ScaledFN,
            CovarianceModel::SincG(_) => CovarianceKind::SincG,
            CovarianceModel::MollifiedRNM(_) => CovarianceKind::MollifiedRNM,
            CovarianceModel::JointRNM0(_) => CovarianceKind::JointRNM0,
        }
    }

    /// `(r, r', r'')` at lag `t`.
    pub fn triple(&self, t: f64) -> (f64, f64, f64) {
        match self {
            CovarianceModel::ExactXN(c) => c.triple(t),
            CovarianceModel::ScaledFN(c) => c.triple(t),
            CovarianceModel::SincG(c) => c.triple(t),
            CovarianceModel::MollifiedRNM(j) => j.mollified(t),
            CovarianceModel::JointRNM0(j) => j.joint(t),
        }
    }

    pub fn r(&self, t: f64) -> f64 {
        self.triple(t).0
    }

    /// `1 - r(t)`, free of cancellation near the origin where the model allows.
    pub fn one_minus_r(&self, t: f64) -> f64 {
        match self {
            CovarianceModel::ExactXN(c) => c.one_minus_r(t),
            CovarianceModel::ScaledFN(c) => c.one_minus_r(t),
            CovarianceModel::SincG(c) => c.one_minus_r(t),
            CovarianceModel::MollifiedRNM(j) => j.mollified_one_minus(t),
            CovarianceModel::JointRNM0(j) => 1.0 - j.joint(t).0,
        }
    }

    /// `-r''(0)`.
    pub fn lambda2(&self) -> f64 {
        match self {
            CovarianceModel::ExactXN(c) => c.lambda2(),
            CovarianceModel::ScaledFN(c) => c.lambda2(),
            CovarianceModel::SincG(c) => c.lambda2(),
            CovarianceModel::MollifiedRNM(j) => j.lambda2_mollified(),
            CovarianceModel::JointRNM0(j) => -j.joint(0.0).2,
        }
    }

    /// Even Taylor expansion at the origin, when the model is analytic there.
    pub fn series(&self) -> Option<&EvenSeries> {
        match self {
            CovarianceModel::ExactXN(c) => Some(c.series()),
            CovarianceModel::ScaledFN(c) => Some(c.series()),
            CovarianceModel::SincG(c) => Some(c.series()),
            _ => None,
        }
    }

    /// Factor converting the model's argument to the scaled variable
    /// `x = m t` in which the small-lag crossover is expressed.
    pub fn crossover_scale(&self) -> f64 {
        match self {
            CovarianceModel::ExactXN(c) => c.m,
            _ => 1.0,
        }
    }

    /// Half-period of the model, if periodic.
    pub fn half_period(&self) -> Option<f64> {
        match self {
            CovarianceModel::ExactXN(_) => Some(PI),
            CovarianceModel::ScaledFN(c) => Some(PI * c.m()),
            CovarianceModel::SincG(_) => None,
            CovarianceModel::MollifiedRNM(j) | CovarianceModel::JointRNM0(j) => Some(PI * j.m()),
        }
    }
}
