//! Counting and locating real zeros of sampled paths.
//!
//! Zeros are found as sign changes on an oversampled equispaced grid and then
//! refined inside their brackets. Grid values that are indistinguishable
//! from zero trigger a 16× denser local grid before classification. Cells
//! whose endpoint values share a sign but whose slopes turn toward zero are
//! screened with a cubic Hermite bound; where the bound allows a dip through
//! zero the turning point is located and a hidden pair split into brackets.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::ensembles::Path;
use crate::error::{Error, Result};

/// Default oversampling relative to the highest harmonic.
pub const DEFAULT_GRID_FACTOR: f64 = 8.0;
/// Smallest admissible oversampling.
pub const MIN_GRID_FACTOR: f64 = 4.0;
const NEAR_ZERO: f64 = 1e-13;
const SUBGRID: usize = 16;
/// Bound on `sup|f|` in units of the path's amplitude scale, used in the
/// Hermite interpolation error `h⁴ sup|f⁗|/384` with `sup|f⁗| ≤ ω⁴ sup|f|`.
const HERMITE_SUP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroReport {
    pub interval: (f64, f64),
    pub count: usize,
    pub locations: Vec<f64>,
    pub grid_points: usize,
    pub refinement_tol: f64,
    /// Near-tangencies that stayed unresolved after sub-gridding; not counted.
    pub ambiguous: usize,
}

/// Sign-change classification of one path on one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZeroCount {
    pub count: usize,
    pub ambiguous: usize,
    pub grid_points: usize,
}

/// `⌈grid_factor · N · (b - a)/period⌉ + 1`.
pub fn grid_size(grid_factor: f64, degree: usize, len: f64, period: f64) -> usize {
    ((grid_factor * degree.max(1) as f64 * len / period).ceil() as usize + 1).max(2)
}

fn check(interval: (f64, f64), grid_factor: f64) -> Result<()> {
    let (a, b) = interval;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!("empty or non-finite interval [{a}, {b}]")));
    }
    if !(grid_factor >= MIN_GRID_FACTOR) {
        return Err(Error::invalid(format!(
            "grid factor {grid_factor} below the minimum {MIN_GRID_FACTOR}"
        )));
    }
    Ok(())
}

/// A bracket `[lo, hi]` holding one sign change, or an exact zero at `lo == hi`.
#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
    f_lo: f64,
}

fn classify<P: Path + ?Sized>(path: &P, a: f64, b: f64, points: usize) -> (Vec<Bracket>, usize) {
    let values = path.values_on_grid(a, b, points);
    let h = (b - a) / (points - 1) as f64;
    let t_at = |k: usize| if k + 1 == points { b } else { a + k as f64 * h };
    let thr = NEAR_ZERO * path.amplitude_scale();
    let near: Vec<bool> = values.iter().map(|v| v.abs() < thr).collect();

    let mut brackets = Vec::new();
    let mut ambiguous = 0usize;
    // last nonzero sample and any exact zeros seen since
    let mut last: Option<(f64, f64)> = None;
    let mut zero_run: Option<f64> = None;
    let mut visit = |t: f64, v: f64, brackets: &mut Vec<Bracket>| {
        if v == 0.0 {
            zero_run.get_or_insert(t);
            return;
        }
        if let Some((tl, vl)) = last {
            if (vl < 0.0) != (v < 0.0) {
                match zero_run {
                    Some(tz) => brackets.push(Bracket { lo: tz, hi: tz, f_lo: 0.0 }),
                    None => brackets.push(Bracket { lo: tl, hi: t, f_lo: vl }),
                }
            } else if zero_run.is_some() {
                ambiguous += 1;
            }
        }
        zero_run = None;
        last = Some((t, v));
    };
    for k in 0..points {
        let t = t_at(k);
        if k > 0 && (near[k] || near[k - 1]) {
            let t0 = t_at(k - 1);
            for j in 1..SUBGRID {
                let s = t0 + (t - t0) * j as f64 / SUBGRID as f64;
                visit(s, path.eval(s).0, &mut brackets);
            }
        }
        visit(t, values[k], &mut brackets);
    }

    // Pairs of zeros inside one cell leave no sign change at the grid points.
    let slopes = path.derivatives_on_grid(a, b, points);
    let omega = TAU * path.bandwidth() as f64 / path.period();
    let slack = (h * omega).powi(4) / 384.0 * HERMITE_SUP * path.amplitude_scale() + thr;
    let mut hidden = 0;
    for k in 1..points {
        if near[k] || near[k - 1] {
            continue;
        }
        let (v0, v1) = (values[k - 1], values[k]);
        let sign = v0.signum();
        if v1.signum() != sign || sign * slopes[k - 1] >= 0.0 || sign * slopes[k] <= 0.0 {
            continue;
        }
        if sign * hermite_min(v0, v1, slopes[k - 1] * h, slopes[k] * h) > slack {
            continue;
        }
        let (t0, t1) = (t_at(k - 1), t_at(k));
        let tc = critical_point(path, t0, t1, sign);
        let vc = path.eval(tc).0;
        if vc.abs() < thr {
            ambiguous += 1;
        } else if vc.signum() != sign {
            brackets.push(Bracket { lo: t0, hi: tc, f_lo: v0 });
            brackets.push(Bracket { lo: tc, hi: t1, f_lo: vc });
            hidden += 1;
        }
    }
    if hidden > 0 {
        log::debug!("{hidden} zero pairs found inside grid cells on [{a}, {b}]");
        brackets.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    }
    (brackets, ambiguous)
}

/// Smallest value on `[0, 1]` of the cubic Hermite interpolant with end
/// values `v0, v1` and end slopes `s0, s1` (per unit of the cell).
fn hermite_min(v0: f64, v1: f64, s0: f64, s1: f64) -> f64 {
    let sign = v0.signum();
    let h = |u: f64| {
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * v0 + (u3 - 2.0 * u2 + u) * s0 + (-2.0 * u3 + 3.0 * u2) * v1 + (u3 - u2) * s1
    };
    // derivative 3A u² + 2B u + C
    let a3 = 2.0 * v0 + s0 - 2.0 * v1 + s1;
    let b2 = -3.0 * v0 - 2.0 * s0 + 3.0 * v1 - s1;
    let c1 = s0;
    let mut best = sign * v0.abs().min(v1.abs());
    let mut consider = |u: f64| {
        if u > 0.0 && u < 1.0 {
            best = if sign > 0.0 { best.min(h(u)) } else { best.max(h(u)) };
        }
    };
    let (qa, qb, qc) = (3.0 * a3, 2.0 * b2, c1);
    if qa.abs() < 1e-300 {
        if qb != 0.0 {
            consider(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let r = disc.sqrt();
            consider((-qb + r) / (2.0 * qa));
            consider((-qb - r) / (2.0 * qa));
        }
    }
    best
}

/// Bisection for the turning point of `sign · f` inside `[t0, t1]`, where
/// `sign · f'` goes from negative to positive.
fn critical_point<P: Path + ?Sized>(path: &P, mut t0: f64, mut t1: f64, sign: f64) -> f64 {
    for _ in 0..60 {
        let t = 0.5 * (t0 + t1);
        if !(t > t0 && t < t1) {
            break;
        }
        if sign * path.eval(t).1 < 0.0 {
            t0 = t;
        } else {
            t1 = t;
        }
    }
    0.5 * (t0 + t1)
}

fn bernstein_check<P: Path + ?Sized>(path: &P, interval: (f64, f64), count: usize) -> Result<()> {
    let len = interval.1 - interval.0;
    if len <= path.period() * (1.0 - 1e-12) && count > 2 * path.bandwidth() {
        return Err(Error::invariant(format!(
            "{count} zeros within one period exceed twice the bandwidth {}",
            path.bandwidth()
        )));
    }
    Ok(())
}

/// Count sign changes without locating the zeros.
pub fn count_sign_changes<P: Path + ?Sized>(
    path: &P,
    interval: (f64, f64),
    grid_factor: f64,
    degree_hint: usize,
) -> Result<ZeroCount> {
    check(interval, grid_factor)?;
    let points = grid_size(grid_factor, degree_hint, interval.1 - interval.0, path.period());
    let (brackets, ambiguous) = classify(path, interval.0, interval.1, points);
    bernstein_check(path, interval, brackets.len())?;
    Ok(ZeroCount {
        count: brackets.len(),
        ambiguous,
        grid_points: points,
    })
}

/// Count and locate the zeros of `path` on `[a, b]`.
pub fn count_zeros<P: Path + ?Sized>(
    path: &P,
    interval: (f64, f64),
    grid_factor: f64,
    degree_hint: usize,
) -> Result<ZeroReport> {
    check(interval, grid_factor)?;
    let (a, b) = interval;
    let points = grid_size(grid_factor, degree_hint, b - a, path.period());
    let tol = (b - a) * 1e-12 / (degree_hint as f64 + 1.0);
    let (brackets, ambiguous) = classify(path, a, b, points);
    let f = |t: f64| path.eval(t);
    let mut locations = Vec::with_capacity(brackets.len());
    for br in &brackets {
        let z = if br.lo == br.hi {
            br.lo
        } else {
            refine_bracket(&f, br.lo, br.hi, br.f_lo, tol)
        };
        locations.push(z);
    }
    bernstein_check(path, interval, locations.len())?;
    Ok(ZeroReport {
        interval,
        count: locations.len(),
        locations,
        grid_points: points,
        refinement_tol: tol,
        ambiguous,
    })
}

/// Locate a zero inside `[t0, t1]`, which must contain a sign change.
///
/// Bisection keeps the bracket; a Newton step is taken whenever it lands
/// inside the current bracket.
pub fn refine_zero<F: Fn(f64) -> (f64, f64)>(f: &F, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
    let f_lo = f(lo).0;
    let f_hi = f(hi).0;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::invalid(format!("no sign change on [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("refinement tolerance must be positive"));
    }
    Ok(refine_bracket(f, lo, hi, f_lo, tol))
}

fn refine_bracket<F: Fn(f64) -> (f64, f64)>(f: &F, mut lo: f64, mut hi: f64, f_lo: f64, tol: f64) -> f64 {
    let neg_lo = f_lo < 0.0;
    let mut t = 0.5 * (lo + hi);
    while hi - lo > tol {
        let (v, d) = f(t);
        if v == 0.0 {
            return t;
        }
        if (v < 0.0) == neg_lo {
            lo = t;
        } else {
            hi = t;
        }
        let step = v / d;
        let newton = t - step;
        if d != 0.0 && newton > lo && newton < hi {
            if step.abs() <= 0.25 * tol {
                return newton;
            }
            t = newton;
        } else {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            t = mid;
        }
    }
    0.5 * (lo + hi)
}
