//! Three-point Kac-Rice quantities and third moments of short-interval counts.
//!
//! For zeros at `0, x, y` the value covariance is the Gram matrix
//! `A = [[1, r(x), r(y)], [r(x), 1, r(y-x)], [r(y), r(y-x), 1]]` with
//! determinant `f(x, y)`, and the conditional variance of the derivative at
//! the `i`-th point is `R_i/f`. Near the origin `f = O(x²y²(y-x)²)` and
//! `R₁ = O(x⁴y⁴(y-x)²)`, so every direct evaluation is written in terms of
//! `θ = r - 1` and, where the model has a Taylor expansion, a bivariate
//! series with the vanishing factors divided out is used instead.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, SMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::CovarianceModel;
use crate::dd::DD;
use crate::ensembles::SpectralDesign;
use crate::error::{Error, Result};
use crate::mollify::joint::DEFAULT_TAIL_EPS;
use crate::rng::{normal, trial_stream, Purpose};
use crate::zeros::{count_zeros, DEFAULT_GRID_FACTOR};

/// Largest lag, in the scaled variable, handled by the bivariate series.
pub const TRIPLE_SERIES_CUTOFF: f64 = 0.1;
/// Total degree kept in the series of `f` and `R₁` before division.
const DEGREE: usize = 18;
/// Eigenvalue slack accepted in the conditional covariance.
const PSD_SLACK: f64 = 1e-10;

/// Homogeneous components: `c[d][i]` multiplies `x^i y^(d-i)`.
#[derive(Debug, Clone)]
struct HPoly {
    c: Vec<Vec<f64>>,
}

impl HPoly {
    fn zero() -> Self {
        HPoly {
            c: (0..=DEGREE).map(|d| vec![0.0; d + 1]).collect(),
        }
    }

    fn scale(mut self, s: f64) -> Self {
        self.c.iter_mut().flatten().for_each(|v| *v *= s);
        self
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for comp in &self.c {
            let d = comp.len() - 1;
            let mut xp = 1.0;
            for (i, &c) in comp.iter().enumerate() {
                if c != 0.0 {
                    acc += c * xp * y.powi((d - i) as i32);
                }
                xp *= x;
            }
        }
        acc
    }

    /// Exact quotient by `x^p y^q (y - x)^s`, dropping the (vanishing) remainder.
    fn divide(&self, p: usize, q: usize, s: usize) -> Self {
        let shift = p + q + s;
        let mut out = HPoly::zero();
        for (d, comp) in self.c.iter().enumerate() {
            if d < shift {
                continue;
            }
            // strip x^p y^q
            let mut v: Vec<f64> = (p..=d - q).map(|i| comp[i]).collect();
            for _ in 0..s {
                // (y - x) q = v: q_i = v_i + q_{i-1}
                let mut quo = vec![0.0; v.len() - 1];
                let mut prev = 0.0;
                for (i, qv) in quo.iter_mut().enumerate() {
                    *qv = v[i] + prev;
                    prev = *qv;
                }
                v = quo;
            }
            out.c[d - shift] = v;
        }
        out
    }
}

/// Commutative ring operations shared by `f64`, `DD` and the series type.
trait Ring: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {}
impl<T: Clone + Add<Output = T> + Sub<Output = T> + Mul<Output = T>> Ring for T {}

impl Add for HPoly {
    type Output = HPoly;
    fn add(mut self, o: HPoly) -> HPoly {
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
        }
        self
    }
}

impl Sub for HPoly {
    type Output = HPoly;
    fn sub(self, o: HPoly) -> HPoly {
        self + o.scale(-1.0)
    }
}

impl Mul for HPoly {
    type Output = HPoly;
    fn mul(self, o: HPoly) -> HPoly {
        let mut out = HPoly::zero();
        for (d1, a) in self.c.iter().enumerate() {
            if a.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (d2, b) in o.c.iter().enumerate().take(DEGREE + 1 - d1) {
                let dst = &mut out.c[d1 + d2];
                for (i, &u) in a.iter().enumerate() {
                    if u == 0.0 {
                        continue;
                    }
                    for (j, &v) in b.iter().enumerate() {
                        dst[i + j] += u * v;
                    }
                }
            }
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `f/(x²y²(y-x)²)` and `R₁/(x⁴y⁴(y-x)²)` as bivariate polynomials.
#[derive(Debug, Clone)]
struct TripleSeries {
    f_reduced: HPoly,
    r1_reduced: HPoly,
}

impl TripleSeries {
    fn new(coeffs: &[f64]) -> Self {
        let mut th_x = HPoly::zero();
        let mut th_y = HPoly::zero();
        let mut th_z = HPoly::zero();
        let mut d_x = HPoly::zero();
        let mut d_y = HPoly::zero();
        for (k, &a) in coeffs.iter().enumerate().skip(1) {
            let e = 2 * k;
            if e > DEGREE {
                break;
            }
            th_x.c[e][e] = a;
            th_y.c[e][0] = a;
            for i in 0..=e {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                th_z.c[e][i] = a * binomial(e, i) * sign;
            }
            d_x.c[e - 1][e - 1] = e as f64 * a;
            d_y.c[e - 1][0] = e as f64 * a;
        }
        let lambda = -2.0 * coeffs[1];
        let f = f_theta(th_x.clone(), th_y.clone(), th_z.clone());
        let h = numerator_theta(f.clone().scale(lambda), th_x, th_y, th_z, d_x, d_y);
        TripleSeries {
            f_reduced: f.divide(2, 2, 2),
            r1_reduced: h.divide(4, 4, 2),
        }
    }
}

/// `f = 2(ab + bc + ca) + 2abc - (a² + b² + c²)` with `a, b, c = θ` at the three lags.
fn f_theta<T: Ring>(a: T, b: T, c: T) -> T {
    let ab = a.clone() * b.clone();
    let cross = ab.clone() + b.clone() * c.clone() + c.clone() * a.clone();
    let abc = ab * c.clone();
    let sq = a.clone() * a + b.clone() * b + c.clone() * c;
    cross.clone() + cross + abc.clone() + abc - sq
}

/// `λf + 2(dₐ²θ_b + d_b²θₐ - dₐd_b(θₐ + θ_b - θ_c)) + (θₐd_b - θ_b dₐ)²`:
/// the conditional-variance numerator of the derivative at the point whose
/// lags to the other two are `a` and `b`; `c` is the lag between those two.
fn numerator_theta<T: Ring>(lf: T, ta: T, tb: T, tc: T, da: T, db: T) -> T {
    let cross = da.clone() * db.clone() * (ta.clone() + tb.clone() - tc);
    let lin = da.clone() * da.clone() * tb.clone() + db.clone() * db.clone() * ta.clone() - cross;
    let w = ta * db - tb * da;
    lf + lin.clone() + lin + w.clone() * w
}

/// `f` and `(R₁, R₂, R₃)` from `θ` and `r'` at the lags `x`, `y`, `y - x`.
fn direct_all<T: Ring + From<f64>>(lambda: T, th: [T; 3], d: [T; 3]) -> (T, [T; 3]) {
    let [tx, ty, tz] = th;
    let [dx, dy, dz] = d;
    let neg = |v: T| T::from(0.0) - v;
    let f = f_theta(tx.clone(), ty.clone(), tz.clone());
    let lf = lambda * f.clone();
    let r1 = numerator_theta(lf.clone(), tx.clone(), ty.clone(), tz.clone(), dx.clone(), dy.clone());
    let r2 = numerator_theta(lf.clone(), tx.clone(), tz.clone(), ty.clone(), neg(dx), dz.clone());
    let r3 = numerator_theta(lf, ty, tz, tx, neg(dy), neg(dz));
    (f, [r1, r2, r3])
}

/// How the three-point quantities are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Route {
    /// Series below the cutoff when the model has one, direct otherwise.
    Auto,
    Series,
    Direct,
}

/// Three-point determinant, conditional numerators and triple density of one model.
#[derive(Debug, Clone)]
pub struct TripleKernel {
    model: CovarianceModel,
    series: Option<TripleSeries>,
    cutoff: f64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: u64,
}

impl TripleKernel {
    pub fn new(model: CovarianceModel) -> Self {
        let series = model.series().map(|s| TripleSeries::new(s.coeffs()));
        let cutoff = TRIPLE_SERIES_CUTOFF / model.crossover_scale();
        TripleKernel { model, series, cutoff }
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    fn check(&self, x: f64, y: f64) -> Result<()> {
        if !(x.is_finite() && y.is_finite()) || x == 0.0 || y == 0.0 || x == y {
            return Err(Error::invalid(format!("degenerate lag pattern (0, {x}, {y})")));
        }
        Ok(())
    }

    fn series_for(&self, x: f64, y: f64, route: Route) -> Result<Option<&TripleSeries>> {
        let lag = x.abs().max(y.abs()).max((y - x).abs());
        match (route, &self.series) {
            (Route::Direct, _) => Ok(None),
            (Route::Series, Some(s)) => Ok(Some(s)),
            (Route::Series, None) => Err(Error::invalid("model has no Taylor expansion")),
            (Route::Auto, Some(s)) if lag <= self.cutoff => Ok(Some(s)),
            (Route::Auto, _) => Ok(None),
        }
    }

    fn direct(&self, x: f64, y: f64) -> (f64, [f64; 3]) {
        let lags = [x, y, y - x];
        if matches!(self.model, CovarianceModel::SincG(_)) && lags.iter().all(|l| l.abs() <= 4.0) {
            // double-double sin x/x - 1 and its derivative
            let eval = |l: f64| {
                let t = DD::new(l);
                let (s, c) = t.sin_cos();
                (s / t - DD::ONE, (t * c - s) / (t * t))
            };
            let [a, b, c] = lags.map(eval);
            let third = DD::ONE / DD::new(3.0);
            let (f, r) = direct_all(third, [a.0, b.0, c.0], [a.1, b.1, c.1]);
            return (f.to_f64(), r.map(DD::to_f64));
        }
        let th = lags.map(|l| -self.model.one_minus_r(l));
        let d = lags.map(|l| self.model.triple(l).1);
        direct_all(self.model.lambda2(), th, d)
    }

    /// `f(x, y) = det A`.
    pub fn triple_det(&self, x: f64, y: f64) -> Result<f64> {
        self.triple_det_with(x, y, Route::Auto)
    }

    pub fn triple_det_with(&self, x: f64, y: f64, route: Route) -> Result<f64> {
        self.check(x, y)?;
        Ok(match self.series_for(x, y, route)? {
            Some(s) => s.f_reduced.eval(x, y) * (x * y * (y - x)).powi(2),
            None => self.direct(x, y).0,
        })
    }

    /// `f(x, y)/(x²y²(y-x)²)`.
    pub fn reduced_det(&self, x: f64, y: f64, route: Route) -> Result<f64> {
        self.check(x, y)?;
        Ok(match self.series_for(x, y, route)? {
            Some(s) => s.f_reduced.eval(x, y),
            None => self.direct(x, y).0 / (x * y * (y - x)).powi(2),
        })
    }

    /// `(R₁, R₂, R₃)`; the conditional variance of the `i`-th derivative is `R_i/f`.
    pub fn conditional_numerators(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        self.conditional_numerators_with(x, y, Route::Auto)
    }

    pub fn conditional_numerators_with(&self, x: f64, y: f64, route: Route) -> Result<[f64; 3]> {
        self.check(x, y)?;
        Ok(match self.series_for(x, y, route)? {
            Some(s) => {
                // R₂ and R₃ are R₁ seen from the points x and y
                let r1 = |a: f64, b: f64| s.r1_reduced.eval(a, b) * (a * a * b * b).powi(2) * (b - a).powi(2);
                [r1(x, y), r1(-x, y - x), r1(-y, x - y)]
            }
            None => self.direct(x, y).1,
        })
    }

    /// `R₁/(x⁴y⁴(y-x)²)`.
    pub fn reduced_r1(&self, x: f64, y: f64, route: Route) -> Result<f64> {
        self.check(x, y)?;
        Ok(match self.series_for(x, y, route)? {
            Some(s) => s.r1_reduced.eval(x, y),
            None => self.direct(x, y).1[0] / ((x * y).powi(4) * (y - x).powi(2)),
        })
    }

    /// Upper bound `√3 √(R₁R₂R₃) / ((2π)^{3/2} f²)` on the triple density
    /// `E|V₁V₂V₃| / ((2π)^{3/2} √f)`, from `E|V₁V₂V₃| ≤ (EV₁²)^{1/2}(EV₂⁴)^{1/4}(EV₃⁴)^{1/4}`.
    pub fn triple_density(&self, x: f64, y: f64) -> Result<f64> {
        let f = self.triple_det(x, y)?;
        if !(f > 0.0) {
            return Err(Error::invalid(format!("f({x}, {y}) = {f} is not positive")));
        }
        let r = self.conditional_numerators(x, y)?;
        let prod = (r[0] * r[1] * r[2]).max(0.0);
        Ok(3f64.sqrt() * prod.sqrt() / ((2.0 * PI).powf(1.5) * f * f))
    }

    /// Covariance of `(V₁, V₂, V₃) = (Y'(0), Y'(x), Y'(y))` given `Y(0) = Y(x) = Y(y) = 0`,
    /// as the Schur complement of the joint covariance of values and derivatives.
    pub fn conditional_covariance(&self, x: f64, y: f64) -> Result<Matrix3<f64>> {
        self.check(x, y)?;
        let p = [0.0, x, y];
        let mut sigma = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let (r, r1, r2) = self.model.triple(p[j] - p[i]);
                sigma[(i, j)] = r;
                sigma[(i, j + 3)] = r1;
                sigma[(j + 3, i)] = r1;
                sigma[(i + 3, j + 3)] = -r2;
            }
        }
        let a: Matrix3<f64> = sigma.fixed_view::<3, 3>(0, 0).into_owned();
        let b: Matrix3<f64> = sigma.fixed_view::<3, 3>(0, 3).into_owned();
        let c: Matrix3<f64> = sigma.fixed_view::<3, 3>(3, 3).into_owned();
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::invariant(format!("value covariance singular at ({x}, {y})")))?;
        let omega = c - b.transpose() * a_inv * b;
        let omega = 0.5 * (omega + omega.transpose());
        let low = omega.symmetric_eigen().eigenvalues.min();
        if low < -PSD_SLACK * self.model.lambda2() {
            return Err(Error::invariant(format!(
                "conditional covariance has eigenvalue {low:e} at ({x}, {y})"
            )));
        }
        Ok(omega)
    }

    /// Monte Carlo estimate of `E|V₁V₂V₃| / ((2π)^{3/2} √f)`.
    pub fn triple_density_mc(&self, x: f64, y: f64, draws: u64, seed: u64) -> Result<McEstimate> {
        if draws < 2 {
            return Err(Error::invalid("need at least two draws"));
        }
        let f = self.triple_det(x, y)?;
        if !(f > 0.0) {
            return Err(Error::invalid(format!("f({x}, {y}) = {f} is not positive")));
        }
        let eig = self.conditional_covariance(x, y)?.symmetric_eigen();
        let root = eig.eigenvectors * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        const BLOCK: u64 = 4096;
        let blocks = draws.div_ceil(BLOCK);
        let sums: Vec<(f64, f64)> = (0..blocks)
            .into_par_iter()
            .map(|k| {
                let mut rng = trial_stream(seed, Purpose::Conditional, k);
                let n = BLOCK.min(draws - k * BLOCK);
                let (mut s, mut s2) = (0.0, 0.0);
                for _ in 0..n {
                    let z = nalgebra::Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng));
                    let v = root * z;
                    let p = (v[0] * v[1] * v[2]).abs();
                    s += p;
                    s2 += p * p;
                }
                (s, s2)
            })
            .collect();
        let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
        let n = draws as f64;
        let mean = s / n;
        let var = (s2 / n - mean * mean) * n / (n - 1.0);
        let norm = (2.0 * PI).powf(1.5) * f.sqrt();
        Ok(McEstimate {
            mean: mean / norm,
            std_error: (var.max(0.0) / n).sqrt() / norm,
            draws,
        })
    }
}

/// Third moments of the zero counts of `Y_N^M` on the `K = L·N` intervals
/// `[(k-1)πm/K, kπm/K]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThirdMomentReport {
    pub degree: usize,
    pub width: f64,
    pub intervals: usize,
    pub interval_length: f64,
    pub trials: u64,
    /// `E Z_k` and `E Z_k³` per interval.
    pub mean: Vec<f64>,
    pub third: Vec<f64>,
    /// Averages over `k`, which by stationarity estimate the common value.
    pub pooled_mean: f64,
    pub pooled_third: f64,
    pub max_third: f64,
    /// `E Z³` of the count on the whole circle.
    pub full_circle_third: f64,
}

pub fn third_moment_mc(n: usize, big_m: f64, l: usize, trials: u64, seed: u64) -> Result<ThirdMomentReport> {
    if l == 0 {
        return Err(Error::invalid("L must be at least 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let design = SpectralDesign::new(n, big_m, DEFAULT_TAIL_EPS)?;
    let m = design.m();
    let k_count = l * n;
    let len = PI * m / k_count as f64;
    let hint = design.truncation_index();
    let counts: Vec<Result<(Vec<u32>, u32)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (_, moll) = design.sample(seed, t);
            let path = moll.path();
            let rep = count_zeros(&path, (0.0, 2.0 * PI * m), DEFAULT_GRID_FACTOR, hint)?;
            let mut bins = vec![0u32; k_count];
            for &z in &rep.locations {
                let k = (z / len) as usize;
                if k < k_count {
                    bins[k] += 1;
                }
            }
            Ok((bins, rep.count as u32))
        })
        .collect();
    let mut s1 = vec![0.0; k_count];
    let mut s3 = vec![0.0; k_count];
    let mut full3 = 0.0;
    for c in counts {
        let (bins, total) = c?;
        for (k, &z) in bins.iter().enumerate() {
            let z = z as f64;
            s1[k] += z;
            s3[k] += z * z * z;
        }
        full3 += (total as f64).powi(3);
    }
    let nt = trials as f64;
    let mean: Vec<f64> = s1.iter().map(|v| v / nt).collect();
    let third: Vec<f64> = s3.iter().map(|v| v / nt).collect();
    let kf = k_count as f64;
    Ok(ThirdMomentReport {
        degree: n,
        width: big_m,
        intervals: k_count,
        interval_length: len,
        trials,
        pooled_mean: mean.iter().sum::<f64>() / kf,
        pooled_third: third.iter().sum::<f64>() / kf,
        max_third: third.iter().copied().fold(0.0, f64::max),
        mean,
        third,
        full_circle_third: full3 / nt,
    })
}
