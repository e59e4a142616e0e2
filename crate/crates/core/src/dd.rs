//! Double-double arithmetic (about 32 significant digits).
//!
//! Only what the cancellation-heavy direct evaluations need: the four field
//! operations and sine/cosine of moderate arguments.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn powi(self, n: u32) -> Self {
        (0..n).fold(DD::ONE, |acc, _| acc * self)
    }

    /// `(sin x, cos x)` by Taylor series; intended for `|x| ≲ 4`.
    pub fn sin_cos(self) -> (DD, DD) {
        let x2 = self * self;
        let mut term = self;
        let mut sin = self;
        let mut k = 1.0;
        while term.hi.abs() > 1e-36 * sin.hi.abs().max(1e-300) {
            term = -(term * x2) / DD::new((k + 1.0) * (k + 2.0));
            sin = sin + term;
            k += 2.0;
        }
        let mut term = DD::ONE;
        let mut cos = DD::ONE;
        let mut k = 0.0;
        while term.hi.abs() > 1e-36 {
            term = -(term * x2) / DD::new((k + 1.0) * (k + 2.0));
            cos = cos + term;
            k += 2.0;
        }
        (sin, cos)
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> Self {
        DD::new(x)
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }
}

impl Mul<f64> for DD {
    type Output = DD;
    fn mul(self, o: f64) -> DD {
        self * DD::new(o)
    }
}
