use std::cell::RefCell;
use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::{normal, trial_stream, Purpose};

/// Angle recurrences are re-synchronized with a fresh `sin_cos` this often.
const RESYNC: usize = 32;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A real-valued path that can be evaluated with its derivative.
pub trait Path: Sync {
    /// `(value, derivative)` at `t`.
    fn eval(&self, t: f64) -> (f64, f64);

    /// Length of one period.
    fn period(&self) -> f64;

    /// Highest harmonic present, in cycles per period.
    fn bandwidth(&self) -> usize;

    /// Typical magnitude of the path, used for near-zero thresholds.
    fn amplitude_scale(&self) -> f64;

    /// Values at `a + k (b - a)/(points - 1)`, `k = 0..points`.
    fn values_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        grid_by_direct(|t| self.eval(t).0, a, b, points)
    }

    /// Derivatives on the same grid as [`Path::values_on_grid`].
    fn derivatives_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        grid_by_direct(|t| self.eval(t).1, a, b, points)
    }
}

fn grid_by_direct<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![f(a)];
    }
    let h = (b - a) / (points - 1) as f64;
    (0..points).map(|k| f(a + k as f64 * h)).collect()
}

/// `c + s Σ_{n=1}^N (a_n sin nt + b_n cos nt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    degree: usize,
    sin_coeffs: Vec<f64>,
    cos_coeffs: Vec<f64>,
    constant: f64,
    scale: f64,
}

impl TrigPolynomial {
    pub fn new(sin_coeffs: Vec<f64>, cos_coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        Self::with_constant(0.0, sin_coeffs, cos_coeffs, scale)
    }

    pub fn with_constant(constant: f64, sin_coeffs: Vec<f64>, cos_coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        if sin_coeffs.len() != cos_coeffs.len() {
            return Err(Error::invalid("sine and cosine coefficient lengths differ"));
        }
        if sin_coeffs.is_empty() {
            return Err(Error::invalid("degree must be at least 1"));
        }
        Ok(TrigPolynomial {
            degree: sin_coeffs.len(),
            sin_coeffs,
            cos_coeffs,
            constant,
            scale,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin_coeffs
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The same polynomial shifted by `h`: `q(t) = p(t + h)`.
    pub fn shifted(&self, h: f64) -> TrigPolynomial {
        let mut a = Vec::with_capacity(self.degree);
        let mut b = Vec::with_capacity(self.degree);
        for n in 1..=self.degree {
            let (s, c) = (n as f64 * h).sin_cos();
            let (an, bn) = (self.sin_coeffs[n - 1], self.cos_coeffs[n - 1]);
            a.push(an * c - bn * s);
            b.push(an * s + bn * c);
        }
        TrigPolynomial {
            degree: self.degree,
            sin_coeffs: a,
            cos_coeffs: b,
            constant: self.constant,
            scale: self.scale,
        }
    }

    pub fn derivative(&self) -> TrigPolynomial {
        let n = (1..=self.degree).map(|n| n as f64);
        TrigPolynomial {
            degree: self.degree,
            sin_coeffs: n.clone().zip(&self.cos_coeffs).map(|(n, b)| -n * b).collect(),
            cos_coeffs: n.zip(&self.sin_coeffs).map(|(n, a)| n * a).collect(),
            constant: 0.0,
            scale: self.scale,
        }
    }

    /// Values at `a + 2πk/points`, `k = 0..points`, by one inverse FFT.
    pub fn periodic_grid(&self, a: f64, points: usize) -> Vec<f64> {
        assert!(points > self.degree, "grid too coarse for the degree");
        let mut buf = vec![Complex::new(0.0, 0.0); points];
        buf[0] = Complex::new(self.constant, 0.0);
        for n in 1..=self.degree {
            let (s, c) = (n as f64 * a).sin_cos();
            let x = Complex::new(self.cos_coeffs[n - 1], -self.sin_coeffs[n - 1]) * self.scale;
            buf[n] += x * Complex::new(c, s);
        }
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(points));
        fft.process(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }
}

/// `(value, derivative)` of `p` at `t`.
pub fn eval_poly(p: &TrigPolynomial, t: f64) -> (f64, f64) {
    let (s1, c1) = t.sin_cos();
    let (mut s, mut c) = (s1, c1);
    let (mut v, mut d) = (0.0, 0.0);
    for n in 1..=p.degree {
        if n > 1 {
            if (n - 1) % RESYNC == 0 {
                (s, c) = (n as f64 * t).sin_cos();
            } else {
                (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            }
        }
        let (a, b) = (p.sin_coeffs[n - 1], p.cos_coeffs[n - 1]);
        let nf = n as f64;
        v += a * s + b * c;
        d += nf * (a * c - b * s);
    }
    (p.constant + p.scale * v, p.scale * d)
}

impl Path for TrigPolynomial {
    fn eval(&self, t: f64) -> (f64, f64) {
        eval_poly(self, t)
    }

    fn period(&self) -> f64 {
        TAU
    }

    fn bandwidth(&self) -> usize {
        self.degree
    }

    fn amplitude_scale(&self) -> f64 {
        let energy: f64 = self
            .sin_coeffs
            .iter()
            .chain(self.cos_coeffs.iter())
            .map(|x| x * x)
            .sum();
        (self.constant * self.constant + self.scale * self.scale * energy / 2.0).sqrt()
    }

    fn values_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        let full = (b - a - TAU).abs() <= 1e-12 * TAU;
        if full && points > self.degree + 1 {
            let mut v = self.periodic_grid(a, points - 1);
            v.push(v[0]);
            // the closing point is the same instant one period later
            return v;
        }
        grid_by_direct(|t| eval_poly(self, t).0, a, b, points)
    }

    fn derivatives_on_grid(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        self.derivative().values_on_grid(a, b, points)
    }
}

/// `(1/√N) Σ (a_n sin nt + b_n cos nt)` with i.i.d. standard normal coefficients.
pub fn sample_qualls(degree: usize, seed: u64) -> Result<TrigPolynomial> {
    sample_qualls_trial(degree, seed, 0)
}

/// Trial `trial` of the Qualls ensemble under master seed `seed`.
pub fn sample_qualls_trial(degree: usize, seed: u64, trial: u64) -> Result<TrigPolynomial> {
    if degree == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    let mut rng = trial_stream(seed, Purpose::Path, trial);
    let mut a = Vec::with_capacity(degree);
    let mut b = Vec::with_capacity(degree);
    for _ in 0..degree {
        a.push(normal(&mut rng));
        b.push(normal(&mut rng));
    }
    TrigPolynomial::new(a, b, 1.0 / (degree as f64).sqrt())
}

/// `Σ a_n cos nt` with i.i.d. standard normal coefficients, unnormalized.
pub fn sample_dunnage(degree: usize, seed: u64) -> Result<TrigPolynomial> {
    sample_dunnage_trial(degree, seed, 0)
}

pub fn sample_dunnage_trial(degree: usize, seed: u64, trial: u64) -> Result<TrigPolynomial> {
    if degree == 0 {
        return Err(Error::invalid("degree must be at least 1"));
    }
    let mut rng = trial_stream(seed, Purpose::Path, trial);
    let b: Vec<f64> = (0..degree).map(|_| normal(&mut rng)).collect();
    TrigPolynomial::new(vec![0.0; degree], b, 1.0)
}
