use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Order of the self-convolution.
pub const ORDER: usize = 8;
/// `(ORDER - 1)!`, the common denominator of the Irwin-Hall pieces.
const DENOM: i64 = 5040;

fn binom(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Irwin-Hall density of order 8 on `[0, 8]`, stored exactly.
///
/// Piece `j` covers `u ∈ [j, j+1)` and is `Σ_i coeffs[j][i] s^i / 5040` with
/// `s = u - j`.
#[derive(Debug, Clone)]
pub struct IrwinHall8 {
    coeffs: [[i64; ORDER]; ORDER],
}

impl Default for IrwinHall8 {
    fn default() -> Self {
        let mut coeffs = [[0i64; ORDER]; ORDER];
        for (j, piece) in coeffs.iter_mut().enumerate() {
            for k in 0..=j as i64 {
                let sign = if k % 2 == 0 { 1 } else { -1 };
                let outer = sign * binom(8, k);
                let shift = j as i64 - k;
                for (i, c) in piece.iter_mut().enumerate() {
                    let i = i as i64;
                    *c += outer * binom(7, i) * shift.pow((7 - i) as u32);
                }
            }
        }
        IrwinHall8 { coeffs }
    }
}

impl IrwinHall8 {
    pub fn piece(&self, j: usize) -> &[i64; ORDER] {
        &self.coeffs[j]
    }

    /// Derivative of order `d` of the density, `d ≤ 7`.
    pub fn derivative(&self, u: f64, d: usize) -> f64 {
        if !(0.0..8.0).contains(&u) {
            return 0.0;
        }
        // the upper half through f(u) = f(8 - u) keeps the tail near u = 8 accurate
        if u > 4.0 {
            let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
            return sign * self.derivative(8.0 - u, d);
        }
        let j = (u.floor() as usize).min(ORDER - 1);
        self.piece_derivative(j, u - j as f64, d)
    }

    /// Derivative of order `d` of piece `j` at local coordinate `s`.
    pub fn piece_derivative(&self, j: usize, s: f64, d: usize) -> f64 {
        let c = &self.coeffs[j];
        let mut acc = 0.0;
        for i in (d..ORDER).rev() {
            let falling: i64 = (0..d as i64).map(|q| i as i64 - q).product();
            acc = acc * s + (c[i] * falling) as f64;
        }
        acc / DENOM as f64
    }

    /// Exact one-sided jump of the `d`-th derivative at interior knot `k`
    /// (between pieces `k-1` and `k`), as a rational with denominator 5040.
    pub fn knot_jump_numerator(&self, k: usize, d: usize) -> i64 {
        assert!((1..ORDER).contains(&k));
        let fall = |i: usize| -> i64 { (0..d as i64).map(|q| i as i64 - q).product() };
        let left: i64 = (d..ORDER).map(|i| self.coeffs[k - 1][i] * fall(i)).sum();
        let right = self.coeffs[k][d] * fall(d);
        right - left
    }

    pub fn value(&self, u: f64) -> f64 {
        self.derivative(u, 0)
    }
}

/// The mollifier `S_M`: the 8-fold self-convolution of the indicator of
/// `[-M, M]` on the circle of circumference `2πm`, normalized to `S_M(0) = 1`.
///
/// On the line this is `f₈(x/(2M) + 4) / f₈(4)` with `f₈` the Irwin-Hall
/// density; on the circle it is periodized, which changes nothing on
/// `[-πm, πm]` as long as `8M ≤ πm`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    m_support: f64,
    m: f64,
    ih: IrwinHall8,
    /// Σ_k f₈(2πm k/(2M) + 4): the periodized central value.
    center: f64,
}

impl Mollifier {
    pub fn new(big_m: f64, m: f64) -> Result<Self> {
        if !(big_m > 0.0 && big_m < PI * m) {
            return Err(Error::invalid(format!(
                "mollifier width M = {big_m} must lie in (0, πm) with m = {m}"
            )));
        }
        let ih = IrwinHall8::default();
        let mut center = 0.0;
        let period_u = 2.0 * PI * m / (2.0 * big_m);
        let mut k = 0i64;
        loop {
            let u = k as f64 * period_u;
            if u >= 4.0 {
                break;
            }
            let v = ih.value(4.0 + u);
            center += if k == 0 { v } else { 2.0 * v };
            k += 1;
        }
        Ok(Mollifier {
            m_support: big_m,
            m,
            ih,
            center,
        })
    }

    pub fn width(&self) -> f64 {
        self.m_support
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn support_radius(&self) -> f64 {
        8.0 * self.m_support
    }

    pub fn irwin_hall(&self) -> &IrwinHall8 {
        &self.ih
    }

    /// The normalizing constant `C` in `S_M = χ^{*8}/(C M⁷)`.
    pub fn constant_c(&self) -> f64 {
        128.0 * self.center
    }

    /// `S_M` and its derivatives up to `order` (≤ 7) at `x`.
    pub fn derivatives(&self, x: f64, order: usize) -> [f64; 3] {
        let period = 2.0 * PI * self.m;
        let scale = 1.0 / (2.0 * self.m_support);
        let mut out = [0.0; 3];
        let x0 = x - period * (x / period).round();
        // images of the line kernel that reach x0
        let reach = 8.0 * self.m_support;
        let kmax = (reach / period).ceil() as i64 + 1;
        for k in -kmax..=kmax {
            let xs = x0 + k as f64 * period;
            if xs.abs() >= reach {
                continue;
            }
            // S(x) = f(4 - |x|/(2M)), evaluated on the lower half for exact evenness
            let u = 4.0 - xs.abs() * scale;
            let chain = -xs.signum() * scale;
            for (d, o) in out.iter_mut().enumerate().take(order.min(2) + 1) {
                *o += self.ih.derivative(u, d) * chain.powi(d as i32);
            }
        }
        for o in out.iter_mut() {
            *o /= self.center;
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x, 0)[0]
    }

    /// `1 - S_M(x)` evaluated from the central polynomial near the origin.
    pub fn one_minus(&self, x: f64) -> f64 {
        let y = x.abs() / self.m_support;
        let wraps = 16.0 * self.m_support > 2.0 * PI * self.m;
        if y < 2.0 && !wraps {
            let c = self.central_coefficients();
            -(1..ORDER).rev().fold(0.0, |acc, i| acc * y + c[i]) * y
        } else {
            1.0 - self.value(x)
        }
    }

    /// Coefficients of `S_M` on `|x| < 2M` as a polynomial in `|x|/M`.
    /// Odd entries 1, 3, 5 vanish and entry 0 is one.
    pub fn central_coefficients(&self) -> [f64; ORDER] {
        let piece = self.ih.piece(4);
        let f4 = piece[0] as f64;
        let mut out = [0.0; ORDER];
        for (i, o) in out.iter_mut().enumerate() {
            *o = piece[i] as f64 / 2f64.powi(i as i32) / f4;
        }
        out
    }

    /// The named coefficients `(b₁, b₂, b₃, b₄)` of `1 + b₁y² + b₂y⁴ + b₃y⁶ + b₄|y|⁷`.
    pub fn b_coefficients(&self) -> [f64; 4] {
        let c = self.central_coefficients();
        [c[2], c[4], c[6], c[7]]
    }

    /// Fourier coefficient of `S_M` in the orthonormal basis
    /// `e^{inx/m}/√(2πm)` of the circle.
    pub fn fourier(&self, n: i64) -> f64 {
        let m = self.m;
        let big_m = self.m_support;
        let chi = if n == 0 {
            (2.0 / PI).sqrt() * big_m / m.sqrt()
        } else {
            let nf = n as f64;
            (2.0 / PI).sqrt() * m.sqrt() / nf * (nf * big_m / m).sin()
        };
        let pref = (2.0 * PI * m).powf(3.5) / (self.constant_c() * big_m.powi(7));
        pref * chi.powi(8)
    }

    /// Upper envelope of `fourier(n)` for `n ≠ 0`, decaying like `n⁻⁸`.
    pub fn fourier_envelope(&self, n: f64) -> f64 {
        let m = self.m;
        let pref = (2.0 * PI * self.m).powf(3.5) / (self.constant_c() * self.m_support.powi(7));
        pref * (2.0 / PI).powi(4) * m.powi(4) / n.abs().powi(8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irwin_hall_center_value() {
        let ih = IrwinHall8::default();
        // f₈(4) = 151/315
        assert_eq!(ih.piece(4)[0], 2416);
        assert!((ih.value(4.0) - 151.0 / 315.0).abs() < 1e-15);
    }

    #[test]
    fn irwin_hall_is_a_density() {
        let ih = IrwinHall8::default();
        let mut total = 0.0;
        let n = 80_000;
        for i in 0..n {
            let u = (i as f64 + 0.5) * 8.0 / n as f64;
            total += ih.value(u) * 8.0 / n as f64;
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn six_derivatives_continuous_exactly() {
        let ih = IrwinHall8::default();
        for k in 1..ORDER {
            for d in 0..=6 {
                assert_eq!(ih.knot_jump_numerator(k, d), 0, "knot {k} derivative {d}");
            }
            assert_ne!(ih.knot_jump_numerator(k, 7), 0);
        }
        // the end knots at 0 and 8: piece 0 starts at zero to order 6, piece 7 ends at zero
        for d in 0..=6 {
            assert_eq!(ih.piece_derivative(0, 0.0, d), 0.0);
            assert!(ih.piece_derivative(7, 1.0, d).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_and_supported() {
        let s = Mollifier::new(10.0, 200.5).unwrap();
        assert_eq!(s.value(0.0), 1.0);
        assert_eq!(s.value(80.0), 0.0);
        assert_eq!(s.value(-80.0), 0.0);
        assert!(s.value(80.0 - 0.1) > 0.0);
        assert!((s.value(13.7) - s.value(-13.7)).abs() < 1e-16);
    }

    #[test]
    fn central_polynomial_shape() {
        let s = Mollifier::new(3.0, 100.5).unwrap();
        let c = s.central_coefficients();
        assert_eq!(c[0], 1.0);
        assert_eq!(c[1], 0.0);
        assert_eq!(c[3], 0.0);
        assert_eq!(c[5], 0.0);
        for &x in &[0.3, 1.1, 5.9] {
            let y: f64 = x / 3.0;
            let poly: f64 = (0..ORDER).map(|i| c[i] * y.powi(i as i32)).sum();
            assert!((poly - s.value(x)).abs() < 1e-14);
            assert!((s.one_minus(x) - (1.0 - s.value(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn range_checked() {
        assert!(Mollifier::new(0.0, 10.5).is_err());
        assert!(Mollifier::new(PI * 10.5, 10.5).is_err());
        assert!(Mollifier::new(1.0, 10.5).is_ok());
    }
}
