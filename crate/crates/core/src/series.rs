//! Small-argument expansions for even covariance functions.
//!
//! Near lag zero the Kac-Rice quantities `1 - r²`, `λ(1 - r²) - r'²` and
//! `r''(1 - r²) + r'² r` vanish to order two, four and four respectively, so
//! evaluating them from `r` directly throws away most significant digits.
//! Here they are built as truncated power series in `s = t²` with the
//! cancelling leading coefficients removed exactly.

/// Number of retained coefficients in `s = t²`.
pub const TERMS: usize = 14;

fn mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

fn horner(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &x| acc * s + x)
}

/// Taylor data of an even covariance `r(t) = Σ c_k t^{2k}` with `c_0 = 1`.
#[derive(Debug, Clone)]
pub struct EvenSeries {
    coeffs: Vec<f64>,
}

impl EvenSeries {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        coeffs.resize(TERMS, 0.0);
        EvenSeries { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `-r''(0)`.
    pub fn lambda2(&self) -> f64 {
        -2.0 * self.coeffs[1]
    }

    /// `(r, r', r'')` at `t`.
    pub fn triple(&self, t: f64) -> (f64, f64, f64) {
        let s = t * t;
        let r = horner(&self.coeffs, s);
        let d1: Vec<f64> = (1..TERMS).map(|k| 2.0 * k as f64 * self.coeffs[k]).collect();
        let d2: Vec<f64> = (1..TERMS)
            .map(|k| (2 * k) as f64 * (2 * k - 1) as f64 * self.coeffs[k])
            .collect();
        (r, t * horner(&d1, s), horner(&d2, s))
    }

    /// `1 - r(t)` without cancellation.
    pub fn one_minus(&self, t: f64) -> f64 {
        let s = t * t;
        -s * horner(&self.coeffs[1..], s)
    }

    pub fn kac_rice(&self) -> KacRiceSeries {
        let c = &self.coeffs;
        let n = TERMS;
        // u = 1 - r = -Σ_{k≥1} c_k s^k ; 1 - r² = u (2 - u)
        let mut u = vec![0.0; n];
        for k in 1..n {
            u[k] = -c[k];
        }
        let mut two_minus_u: Vec<f64> = u.iter().map(|x| -x).collect();
        two_minus_u[0] += 2.0;
        let q_full = mul(&u, &two_minus_u, n);
        // q = (1 - r²)/s
        let q: Vec<f64> = q_full[1..].to_vec();

        // r' = t·p(s), p = Σ 2k c_k s^{k-1}; r'² = s·p²
        let p: Vec<f64> = (1..n).map(|k| 2.0 * k as f64 * c[k]).collect();
        let p2 = mul(&p, &p, n - 1);
        // r'' = Σ 2k(2k-1) c_k s^{k-1}
        let d2: Vec<f64> = (1..n)
            .map(|k| (2 * k) as f64 * (2 * k - 1) as f64 * c[k])
            .collect();
        let lambda = -2.0 * c[1];

        // [λ(1-r²) - r'²]/s = λ q - p²; its constant term cancels exactly.
        let len = n - 1;
        let mut numer_s: Vec<f64> = (0..len).map(|i| lambda * q[i] - p2[i]).collect();
        numer_s[0] = 0.0;
        let numer = numer_s[1..].to_vec();

        // [r''(1-r²) + r'² r]/s = d2·q + p²·r ; constant term cancels exactly.
        let d2q = mul(&d2, &q, len);
        let p2r = mul(&p2, c, len);
        let mut rho_s: Vec<f64> = (0..len).map(|i| d2q[i] + p2r[i]).collect();
        rho_s[0] = 0.0;
        let rho_numer = rho_s[1..].to_vec();

        KacRiceSeries {
            q,
            numer,
            rho_numer,
        }
    }
}

/// Series for the reduced Kac-Rice quantities (see module docs).
#[derive(Debug, Clone)]
pub struct KacRiceSeries {
    /// `(1 - r²)/t²`
    pub q: Vec<f64>,
    /// `[λ(1 - r²) - r'²]/t⁴`
    pub numer: Vec<f64>,
    /// `[r''(1 - r²) + r'² r]/t⁴`
    pub rho_numer: Vec<f64>,
}

impl KacRiceSeries {
    /// Returns `([λ(1-r²) - r'²]/(1-r²)^{3/2}, ρ)` at `t`.
    pub fn factor_and_rho(&self, t: f64) -> (f64, f64) {
        let s = t * t;
        let q = horner(&self.q, s);
        let numer = horner(&self.numer, s);
        let rho_numer = horner(&self.rho_numer, s);
        (t.abs() * numer / q.powf(1.5), rho_numer / numer)
    }

    pub fn rho_at_zero(&self) -> f64 {
        self.rho_numer[0] / self.numer[0]
    }
}
