//! Globally adaptive Gauss-Kronrod quadrature.
//!
//! A 21-point Kronrod rule with its embedded 10-point Gauss rule is applied
//! on every subinterval; the interval with the largest error estimate is
//! bisected until the summed estimate meets the requested tolerance. The
//! error estimate follows the QUADPACK heuristic.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7, 9.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of a single rule application: integral, error estimate.
pub fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_intervals: 20_000,
        }
    }
}

impl QuadOptions {
    pub fn abs(tol: f64) -> Self {
        QuadOptions {
            abs_tol: tol,
            ..Default::default()
        }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrate over `[points[0], points[last]]`, seeding the adaptive
/// refinement with the given breakpoints. Useful for oscillatory integrands
/// where one panel per period is a natural starting mesh.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(Error::invalid("quadrature needs at least two breakpoints"));
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("quadrature breakpoints must be nondecreasing"));
    }
    let mut heap = BinaryHeap::with_capacity(points.len() * 2);
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e) = kronrod21(&mut f, w[0], w[1]);
        total += v;
        total_err += e;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let target = |total: f64| opts.abs_tol.max(opts.rel_tol * total.abs());
    while total_err > target(total) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::ToleranceNotMet {
                requested: target(total),
                achieved: total_err,
                context: format!("adaptive quadrature hit {} intervals", heap.len()),
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::ToleranceNotMet {
                requested: target(total),
                achieved: total_err,
                context: "interval width reached machine resolution".into(),
            });
        }
        let (v1, e1) = kronrod21(&mut f, worst.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of the running totals
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        intervals: heap.len(),
    })
}

/// Nested two-dimensional integration over a rectangle.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    x: (f64, f64),
    y: (f64, f64),
    opts: QuadOptions,
) -> Result<QuadResult> {
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol / (4.0 * (x.1 - x.0).abs().max(1.0)),
        ..opts
    };
    let mut inner_err: f64 = 0.0;
    let mut failure = None;
    let outer = integrate(
        |xv| match integrate(|yv| f(xv, yv), y.0, y.1, inner_opts) {
            Ok(r) => {
                inner_err = inner_err.max(r.error);
                r.value
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        x.0,
        x.1,
        QuadOptions {
            abs_tol: opts.abs_tol / 2.0,
            ..opts
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(QuadResult {
        value: outer.value,
        error: outer.error + inner_err * (x.1 - x.0).abs(),
        intervals: outer.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(7) - 3.0 * x * x, 0.0, 2.0, QuadOptions::abs(1e-11)).unwrap();
        assert!((r.value - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_with_breaks() {
        let breaks: Vec<f64> = (0..=40).map(|k| k as f64 * std::f64::consts::PI).collect();
        let r = integrate_with_breaks(|x| x.sin().powi(2), &breaks, QuadOptions::abs(1e-12)).unwrap();
        assert!((r.value - 20.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, QuadOptions::abs(1e-9)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn gaussian_2d() {
        let r = integrate_2d(
            |x, y| (-(x * x + y * y) / 2.0).exp(),
            (-9.0, 9.0),
            (-9.0, 9.0),
            QuadOptions::abs(1e-11),
        )
        .unwrap();
        assert!((r.value - std::f64::consts::TAU).abs() < 1e-9);
    }

    #[test]
    fn bad_breaks_rejected() {
        assert!(integrate_with_breaks(|x| x, &[1.0], QuadOptions::default()).is_err());
        assert!(integrate_with_breaks(|x| x, &[1.0, 0.0], QuadOptions::default()).is_err());
    }
}
