use std::f64::consts::PI;

use crate::analytic::covariance::ScaledQualls;
use crate::error::{Error, Result};

use super::mollifier::Mollifier;

/// Default bound on the spectral mass dropped when truncating `r̂_N^M`.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;
/// Hard cap on the retained spectral index.
pub const MAX_SPECTRAL_INDEX: usize = 1 << 20;

/// Covariance data of the pair `(Y_N, Y_N^M)` on the circle `[-πm, πm]`.
///
/// Holds the mollified covariance `r^M = r_N · S_M`, the cross covariance
/// `r^{M,0}(x) = E[Y_N(y) Y_N^M(y + x)]`, and the Fourier coefficients of
/// both in the orthonormal basis `e^{inx/m}/√(2πm)`.
#[derive(Debug, Clone)]
pub struct JointCovariance {
    n: usize,
    base: ScaledQualls,
    mollifier: Mollifier,
    /// `r̂_N^M(n)` for `0 ≤ n ≤ truncation`.
    rhat_m: Vec<f64>,
    /// Spectral mass (in variance units) beyond `truncation`.
    tail_mass: f64,
    /// Cosine weights of `r^{M,0}`: `r^{M,0}(x) = Σ_{n=1}^N w_n cos(nx/m)`.
    joint_weights: Vec<f64>,
}

impl JointCovariance {
    pub fn new(n: usize, big_m: f64) -> Result<Self> {
        Self::with_tail(n, big_m, DEFAULT_TAIL_EPS, MAX_SPECTRAL_INDEX)
    }

    pub fn with_tail(n: usize, big_m: f64, tail_eps: f64, max_index: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("degree must be at least 1"));
        }
        if !(tail_eps > 0.0) {
            return Err(Error::invalid("tail_eps must be positive"));
        }
        let base = ScaledQualls::new(n);
        let m = base.m();
        let mollifier = Mollifier::new(big_m, m)?;
        let nf = n as f64;
        let var_unit = (2.0 / (PI * m)).sqrt();

        // Ŝ_M on a window that grows as the truncation index grows.
        let mut shat: Vec<f64> = Vec::new(); // shat[j] = Ŝ_M(j), j ≥ 0 (even in j)
        let ensure = |shat: &mut Vec<f64>, upto: usize| {
            while shat.len() <= upto {
                let j = shat.len() as i64;
                shat.push(mollifier.fourier(j));
            }
        };
        let rhat_at = |shat: &Vec<f64>, k: i64| -> f64 {
            // (1/2N) Σ_{1≤|j|≤N} Ŝ_M(k - j)
            let mut acc = 0.0;
            for j in 1..=n as i64 {
                acc += shat[(k - j).unsigned_abs() as usize] + shat[(k + j).unsigned_abs() as usize];
            }
            acc / (2.0 * nf)
        };
        let tail_bound = |k: usize| -> f64 {
            // Σ_{n>k} r̂^M(n) ≤ (2N+1)/(2N) Σ_{j>k-N} envelope(j), for k > N
            let j0 = (k - n) as f64;
            let env_sum = mollifier.fourier_envelope(j0) * j0 / 7.0;
            var_unit * (2.0 * nf + 1.0) / (2.0 * nf) * env_sum
        };

        let mut rhat_m = Vec::new();
        let mut k = 0usize;
        loop {
            ensure(&mut shat, k + n);
            rhat_m.push(rhat_at(&shat, k as i64).max(0.0));
            if k > n + 1 && tail_bound(k) < tail_eps {
                break;
            }
            k += 1;
            if k > max_index {
                return Err(Error::ToleranceNotMet {
                    requested: tail_eps,
                    achieved: tail_bound(k - 1),
                    context: format!("spectral truncation exceeded index {max_index}"),
                });
            }
        }
        let tail_mass = tail_bound(k);

        let rhat_n = (PI * m).sqrt() / (2f64.sqrt() * nf);
        let joint_weights = (0..=n)
            .map(|j| {
                if j == 0 {
                    0.0
                } else {
                    (rhat_n * rhat_m[j]).sqrt() * var_unit
                }
            })
            .collect();

        Ok(JointCovariance {
            n,
            base,
            mollifier,
            rhat_m,
            tail_mass,
            joint_weights,
        })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> f64 {
        self.base.m()
    }

    pub fn width(&self) -> f64 {
        self.mollifier.width()
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn base(&self) -> &ScaledQualls {
        &self.base
    }

    /// Largest retained spectral index of `r̂_N^M`.
    pub fn truncation(&self) -> usize {
        self.rhat_m.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `r̂_N(n) = √(πm)/(√2 N)` for `1 ≤ |n| ≤ N`, zero otherwise.
    pub fn rhat_base(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        if (1..=self.n).contains(&k) {
            (PI * self.m()).sqrt() / (2f64.sqrt() * self.n as f64)
        } else {
            0.0
        }
    }

    /// `r̂_N^M(n)`; zero beyond the truncation index.
    pub fn rhat_mollified(&self, k: i64) -> f64 {
        self.rhat_m.get(k.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    /// `r̂_N^{M,0}(n) = √(r̂_N(n) r̂_N^M(n))`.
    pub fn rhat_joint(&self, k: i64) -> f64 {
        (self.rhat_base(k) * self.rhat_mollified(k)).sqrt()
    }

    /// Retained `r̂_N^M` sequence, index `0..=truncation`.
    pub fn rhat_mollified_all(&self) -> &[f64] {
        &self.rhat_m
    }

    /// `r_N` and derivatives in the scaled variable.
    pub fn base_triple(&self, x: f64) -> (f64, f64, f64) {
        self.base.triple(x)
    }

    /// `r^M = r_N · S_M` and derivatives.
    pub fn mollified(&self, x: f64) -> (f64, f64, f64) {
        let (r, r1, r2) = self.base.triple(x);
        let [s, s1, s2] = self.mollifier.derivatives(x, 2);
        (r * s, r1 * s + r * s1, r2 * s + 2.0 * r1 * s1 + r * s2)
    }

    /// `1 - r^M(x) = (1 - r) + r (1 - S)`.
    pub fn mollified_one_minus(&self, x: f64) -> f64 {
        let u = self.base.one_minus_r(x);
        let r = 1.0 - u;
        u + r * self.mollifier.one_minus(x)
    }

    /// `r^{M,0}` and derivatives.
    pub fn joint(&self, x: f64) -> (f64, f64, f64) {
        let m = self.m();
        let (mut r, mut r1, mut r2) = (0.0, 0.0, 0.0);
        for (j, &w) in self.joint_weights.iter().enumerate().skip(1) {
            let freq = j as f64 / m;
            let (s, c) = (freq * x).sin_cos();
            r += w * c;
            r1 -= w * freq * s;
            r2 -= w * freq * freq * c;
        }
        (r, r1, r2)
    }

    /// `λ'_{2,N} = -r_N''(0)`.
    pub fn lambda2_base(&self) -> f64 {
        self.base.lambda2()
    }

    /// `λ^M'_{2,N} = -(r^M)''(0) = λ' - S_M''(0)`.
    pub fn lambda2_mollified(&self) -> f64 {
        -self.mollified(0.0).2
    }

    /// Mollified covariance reconstructed from its truncated Fourier series.
    pub fn mollified_from_series(&self, x: f64) -> f64 {
        let m = self.m();
        let unit = 1.0 / (2.0 * PI * m).sqrt();
        let mut acc = self.rhat_m[0] * unit;
        for (j, &c) in self.rhat_m.iter().enumerate().skip(1) {
            acc += 2.0 * unit * c * (j as f64 * x / m).cos();
        }
        acc
    }
}
