//! Monte Carlo experiments on zero counts and their summaries.
//!
//! Every trial reads its own random streams, trials run in parallel and
//! results are collected in trial order, so a summary depends only on the
//! configuration and never on the number of worker threads.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{variance_exact, variance_interval, VarianceReport};
use crate::ensembles::{sample_dunnage_trial, sample_qualls_trial, Path, SpectralDesign};
use crate::error::{Error, Result};
use crate::mollify::joint::DEFAULT_TAIL_EPS;
use crate::rng::{trial_stream, Purpose};
use crate::scaling::{compute_c, DEFAULT_C0_TOL};
use crate::zeros::{count_sign_changes, MIN_GRID_FACTOR};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Fewest trials for which a standard error is reported.
pub const MIN_TRIALS: u64 = 100;
/// Largest exponent `β` in `M = N^β` admitted in CLT runs.
pub const MAX_CLT_BETA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Clt,
    CltShort,
    VarianceConvergence,
    VarDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    Qualls,
    /// `Σ a_n cos nt`; runs are exploratory and carry no analytic reference.
    Dunnage,
}

/// Mollifier width as a function of the degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthRule {
    Fixed(f64),
    /// `M = N^β`.
    Power(f64),
}

impl WidthRule {
    pub fn width(&self, n: usize) -> f64 {
        match *self {
            WidthRule::Fixed(m) => m,
            WidthRule::Power(beta) => (n as f64).powf(beta),
        }
    }

    /// Parse `N^β` or a plain positive number.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let rule = if let Some(b) = s.strip_prefix("N^").or_else(|| s.strip_prefix("n^")) {
            WidthRule::Power(b.parse().map_err(|_| Error::invalid(format!("bad exponent in '{s}'")))?)
        } else {
            WidthRule::Fixed(s.parse().map_err(|_| Error::invalid(format!("bad mollifier width '{s}'")))?)
        };
        match rule {
            WidthRule::Fixed(m) if !(m > 0.0 && m.is_finite()) => Err(Error::invalid(format!("width {m} must be positive"))),
            WidthRule::Power(b) if !b.is_finite() => Err(Error::invalid("exponent must be finite")),
            r => Ok(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub degrees: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    /// Base interval `[a, b] ⊂ [0, 2π]`.
    pub interval: (f64, f64),
    /// Short-interval exponent: the window is `[a, a + (b - a) N^{-γ}]`.
    pub gamma: Option<f64>,
    pub mollify: Vec<WidthRule>,
    pub grid_factor: f64,
    pub quad_tol: f64,
    /// Not echoed: results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
    pub ensemble: Ensemble,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, degrees: Vec<usize>) -> Self {
        ExperimentConfig {
            kind,
            degrees,
            trials: 1000,
            seed: 1,
            interval: (0.0, TAU),
            gamma: None,
            mollify: Vec::new(),
            grid_factor: crate::zeros::DEFAULT_GRID_FACTOR,
            quad_tol: 1e-9,
            threads: None,
            ensemble: Ensemble::Qualls,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.degrees.contains(&0) {
            return Err(Error::invalid("degrees must be a nonempty list of positive integers"));
        }
        let (a, b) = self.interval;
        if !(0.0 <= a && a < b && b <= TAU) {
            return Err(Error::invalid(format!("interval [{a}, {b}] must lie in [0, 2π] with a < b")));
        }
        if !(self.grid_factor >= MIN_GRID_FACTOR) {
            return Err(Error::invalid(format!("grid factor must be at least {MIN_GRID_FACTOR}")));
        }
        if !(self.quad_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("thread count must be positive"));
        }
        let monte_carlo = self.kind != ExperimentKind::VarianceConvergence;
        if monte_carlo && self.trials < MIN_TRIALS {
            return Err(Error::invalid(format!("at least {MIN_TRIALS} trials are needed, got {}", self.trials)));
        }
        match self.kind {
            ExperimentKind::CltShort => match self.gamma {
                Some(g) if (0.0..1.0).contains(&g) => {}
                Some(g) => return Err(Error::invalid(format!("γ = {g} outside [0, 1): the window must hold many zeros"))),
                None => return Err(Error::invalid("short-interval runs need γ")),
            },
            _ if self.gamma.is_some() => return Err(Error::invalid("γ applies to short-interval runs only")),
            _ => {}
        }
        match self.kind {
            ExperimentKind::Clt | ExperimentKind::CltShort => {
                if self.mollify.len() > 1 {
                    return Err(Error::invalid("CLT runs take at most one mollifier rule"));
                }
                if let Some(WidthRule::Power(b)) = self.mollify.first() {
                    if !(*b < MAX_CLT_BETA) {
                        return Err(Error::invalid(format!("M = N^β needs β < {MAX_CLT_BETA} in CLT runs, got {b}")));
                    }
                }
                if !self.mollify.is_empty() && self.ensemble == Ensemble::Dunnage {
                    return Err(Error::invalid("mollified runs use the Qualls ensemble"));
                }
            }
            ExperimentKind::VarDiff => {
                if self.mollify.is_empty() {
                    return Err(Error::invalid("var-diff needs at least one mollifier width"));
                }
            }
            ExperimentKind::VarianceConvergence => {}
        }
        Ok(())
    }
}

/// Kolmogorov-Smirnov distance to the standard normal and its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_statistic(samples: &[f64]) -> Result<KsResult> {
    if samples.len() < MIN_TRIALS as usize {
        return Err(Error::invalid(format!("KS needs at least {MIN_TRIALS} samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("KS samples must be finite"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    Ok(KsResult {
        distance: d,
        p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsSummary {
    /// Distance after uniform jitter of half a lattice step.
    pub jittered: KsResult,
    pub raw: KsResult,
    /// Spacing of the normalized count lattice.
    pub lattice_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeRecord {
    pub degree: usize,
    pub trials: u64,
    pub seed: u64,
    pub interval: (f64, f64),
    pub width: Option<f64>,
    pub sample_mean: f64,
    pub mean_std_error: f64,
    pub sample_variance: f64,
    pub variance_std_error: f64,
    pub sample_third_central: f64,
    /// Sample `E[Z(Z-1)]` and its standard error.
    pub sample_factorial2: f64,
    pub factorial2_std_error: f64,
    pub analytic_mean: Option<f64>,
    pub analytic_variance: Option<f64>,
    pub analytic_variance_error: Option<f64>,
    pub analytic_factorial2: Option<f64>,
    /// Asymptotic variance `c (b - a) N/(2π)`.
    pub asymptotic_variance: f64,
    pub ks: Option<KsSummary>,
    /// All counts equal: no distributional statistics.
    pub degenerate: bool,
    pub exploratory: bool,
    pub ambiguous: usize,
    pub normalized: Vec<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub degree: usize,
    pub variance: f64,
    pub error: f64,
    pub ratio: f64,
    /// `Var/N - c`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceConvergence {
    pub c: f64,
    pub c_error: f64,
    pub rows: Vec<VarianceRow>,
    /// `|Var/N - c|` strictly decreasing along the list.
    pub strictly_decreasing: bool,
    pub sign_consistent: bool,
    /// Least-squares slope of `log|Var/N - c|` against `log N`.
    pub decay_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarDiffRow {
    pub width: f64,
    pub truncation: usize,
    pub mean_difference: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    /// `Var(Z_N - Z_N^M)/N`.
    pub ratio: f64,
    pub ratio_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarDiffTable {
    pub degree: usize,
    pub trials: u64,
    pub seed: u64,
    pub rows: Vec<VarDiffRow>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "data", rename_all = "kebab-case")]
pub enum Results {
    Clt(Vec<DegreeRecord>),
    Variance(VarianceConvergence),
    VarDiff(Vec<VarDiffTable>),
}

/// Where an analytic reference value comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub quantity: String,
    pub method: String,
}

fn reference(quantity: &str, method: &str) -> Reference {
    Reference {
        quantity: quantity.into(),
        method: method.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub results: Results,
    pub references: Vec<Reference>,
    pub wall_time_s: f64,
}

/// Run `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let start = Instant::now();
    let (results, references) = with_threads(config.threads, || -> Result<_> {
        Ok(match config.kind {
            ExperimentKind::Clt => (Results::Clt(run_full_circle_clt(config)?), clt_references(config)),
            ExperimentKind::CltShort => (Results::Clt(run_short_interval_clt(config)?), clt_references(config)),
            ExperimentKind::VarianceConvergence => (
                Results::Variance(run_variance_convergence(&config.degrees, config.quad_tol)?),
                vec![
                    reference("variance", "Kac-Rice second moment, adaptive Gauss-Kronrod over π-panels"),
                    reference("c", "4c₀/(3π) + 2/√3 with c₀ by panel quadrature plus fitted tail"),
                ],
            ),
            ExperimentKind::VarDiff => {
                let mut tables = Vec::with_capacity(config.degrees.len());
                for &n in &config.degrees {
                    let widths: Vec<f64> = config.mollify.iter().map(|r| r.width(n)).collect();
                    tables.push(run_var_diff(n, &widths, config.trials, config.seed, config.grid_factor)?);
                }
                (
                    Results::VarDiff(tables),
                    vec![reference("Y_N^M", "spectral coupling: both processes share one gaussian sequence")],
                )
            }
        })
    })??;
    Ok(ExperimentSummary {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.into(),
        config: config.clone(),
        results,
        references,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn clt_references(config: &ExperimentConfig) -> Vec<Reference> {
    let mut r = vec![
        reference("analytic_mean", "E Z = (b - a)√λ₂/π with λ₂ = (N+1)(2N+1)/6"),
        reference(
            "analytic_variance",
            "Kac-Rice second moment of the count on the window, adaptive Gauss-Kronrod",
        ),
        reference("asymptotic_variance", "c (b - a) N/(2π) with c = 4c₀/(3π) + 2/√3"),
        reference("normalized", "(Z - analytic_mean)/√analytic_variance"),
    ];
    if !config.mollify.is_empty() {
        r.push(reference(
            "analytic_variance",
            "mollified runs: variance of the unmollified count; mean from λ₂ of r·S_M",
        ));
    }
    if config.ensemble == Ensemble::Dunnage {
        r.push(reference("normalized", "Dunnage runs: sample mean and sample variance"));
    }
    r
}

/// `(mean, variance, third central moment, fourth central moment)`.
fn moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    (mean, m2 / (n - 1.0), m3 / n, m4 / n)
}

fn window(config: &ExperimentConfig, n: usize) -> (f64, f64) {
    let (a, b) = config.interval;
    match config.gamma {
        Some(g) => (a, a + (b - a) * (n as f64).powf(-g)),
        None => (a, b),
    }
}

/// Zero counts of `trials` independent paths on `[a, b]` (original variable).
fn sample_counts(config: &ExperimentConfig, n: usize, interval: (f64, f64)) -> Result<(Vec<u32>, usize, Option<f64>, Option<f64>)> {
    let trials = config.trials;
    let gf = config.grid_factor;
    let (counts, width, lambda_m): (Vec<Result<(u32, usize)>>, _, _) = match config.mollify.first() {
        Some(rule) => {
            let width = rule.width(n);
            let design = SpectralDesign::new(n, width, DEFAULT_TAIL_EPS)?;
            let m = design.m();
            let hint = design.truncation_index();
            let lam = design.joint().lambda2_mollified();
            let scaled = (m * interval.0, m * interval.1);
            let c = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let path = design.sample(config.seed, t).1.path();
                    let z = count_sign_changes(&path, scaled, gf, hint)?;
                    Ok((z.count as u32, z.ambiguous))
                })
                .collect();
            (c, Some(width), Some(lam))
        }
        None => {
            let c = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let p = match config.ensemble {
                        Ensemble::Qualls => sample_qualls_trial(n, config.seed, t)?,
                        Ensemble::Dunnage => sample_dunnage_trial(n, config.seed, t)?,
                    };
                    let z = count_sign_changes(&p, interval, gf, n)?;
                    Ok((z.count as u32, z.ambiguous))
                })
                .collect();
            (c, None, None)
        }
    };
    let mut out = Vec::with_capacity(counts.len());
    let mut ambiguous = 0;
    for c in counts {
        let (z, a) = c?;
        out.push(z);
        ambiguous += a;
    }
    Ok((out, ambiguous, width, lambda_m))
}

fn degree_record(config: &ExperimentConfig, n: usize, c: f64) -> Result<DegreeRecord> {
    let start = Instant::now();
    let interval = window(config, n);
    let len = interval.1 - interval.0;
    let full = len >= TAU * (1.0 - 1e-12);
    let (counts, ambiguous, width, lambda_m) = sample_counts(config, n, interval)?;
    if ambiguous > 0 {
        log::warn!("N = {n}: {ambiguous} near-tangencies left unresolved and not counted");
    }
    let xs: Vec<f64> = counts.iter().map(|&z| z as f64).collect();
    let t = xs.len() as f64;
    let (mean, var, third, fourth) = moments(&xs);
    let fact: Vec<f64> = xs.iter().map(|z| z * (z - 1.0)).collect();
    let (fact_mean, fact_var, _, _) = moments(&fact);

    let exploratory = config.ensemble == Ensemble::Dunnage;
    let (analytic_mean, quad): (Option<f64>, Option<VarianceReport>) = if exploratory {
        (None, None)
    } else {
        let q = variance_interval(n, len, config.quad_tol)?;
        let m = n as f64 + 0.5;
        let mean = match lambda_m {
            // λ₂ of r^M is per unit of the scaled variable
            Some(lam) => m * len * lam.sqrt() / PI,
            None => q.expected,
        };
        (Some(mean), Some(q))
    };
    let analytic_variance = quad.map(|q| q.variance);
    let analytic_factorial2 = match (&quad, lambda_m) {
        (Some(q), None) => Some(q.variance - q.expected + q.expected * q.expected),
        _ => None,
    };

    let degenerate = var == 0.0;
    let (centre, spread) = match (analytic_mean, analytic_variance) {
        (Some(m), Some(v)) if v > 0.0 => (m, v.sqrt()),
        _ => (mean, var.sqrt()),
    };
    let normalized: Vec<f64> = if spread > 0.0 {
        xs.iter().map(|z| (z - centre) / spread).collect()
    } else {
        vec![0.0; xs.len()]
    };
    let ks = if degenerate || spread == 0.0 {
        None
    } else {
        // counts on the whole circle are even
        let lattice_step = if full { 2.0 } else { 1.0 } / spread;
        let jittered: Vec<f64> = normalized
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let mut rng = trial_stream(config.seed, Purpose::Jitter, k as u64);
                z + lattice_step * (rng.random::<f64>() - 0.5)
            })
            .collect();
        Some(KsSummary {
            jittered: ks_statistic(&jittered)?,
            raw: ks_statistic(&normalized)?,
            lattice_step,
        })
    };
    Ok(DegreeRecord {
        degree: n,
        trials: config.trials,
        seed: config.seed,
        interval,
        width,
        sample_mean: mean,
        mean_std_error: (var / t).sqrt(),
        sample_variance: var,
        variance_std_error: ((fourth - var * var).max(0.0) / t).sqrt(),
        sample_third_central: third,
        sample_factorial2: fact_mean,
        factorial2_std_error: (fact_var / t).sqrt(),
        analytic_mean,
        analytic_variance,
        analytic_variance_error: quad.map(|q| q.error),
        analytic_factorial2,
        asymptotic_variance: c * len * n as f64 / TAU,
        ks,
        degenerate,
        exploratory,
        ambiguous,
        normalized,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn clt_records(config: &ExperimentConfig) -> Result<Vec<DegreeRecord>> {
    config.validate()?;
    let c = compute_c(DEFAULT_C0_TOL)?.c;
    config.degrees.iter().map(|&n| degree_record(config, n, c)).collect()
}

/// Zero counts on the base interval, normalized by the exact mean and variance.
pub fn run_full_circle_clt(config: &ExperimentConfig) -> Result<Vec<DegreeRecord>> {
    if config.kind != ExperimentKind::Clt {
        return Err(Error::invalid("configuration is not a full-circle CLT run"));
    }
    clt_records(config)
}

/// Zero counts on the shrinking windows `[a, a + (b - a) N^{-γ}]`.
pub fn run_short_interval_clt(config: &ExperimentConfig) -> Result<Vec<DegreeRecord>> {
    if config.kind != ExperimentKind::CltShort {
        return Err(Error::invalid("configuration is not a short-interval CLT run"));
    }
    clt_records(config)
}

pub fn run_variance_convergence(degrees: &[usize], quad_tol: f64) -> Result<VarianceConvergence> {
    if degrees.is_empty() {
        return Err(Error::invalid("empty degree list"));
    }
    let c = compute_c(DEFAULT_C0_TOL)?;
    let reports: Vec<Result<VarianceReport>> = degrees.par_iter().map(|&n| variance_exact(n, quad_tol)).collect();
    let mut rows = Vec::with_capacity(degrees.len());
    for r in reports {
        let r = r?;
        let ratio = r.variance / r.degree as f64;
        rows.push(VarianceRow {
            degree: r.degree,
            variance: r.variance,
            error: r.error,
            ratio,
            deviation: ratio - c.c,
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].deviation.abs() < w[0].deviation.abs());
    let sign_consistent = rows.iter().all(|r| r.deviation > 0.0) || rows.iter().all(|r| r.deviation < 0.0);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.deviation != 0.0)
        .map(|r| ((r.degree as f64).ln(), r.deviation.abs().ln()))
        .collect();
    let decay_exponent = (pts.len() >= 2).then(|| {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(VarianceConvergence {
        c: c.c,
        c_error: c.error,
        rows,
        strictly_decreasing,
        sign_consistent,
        decay_exponent,
    })
}

/// `Var(Z_N - Z_N^M)/N` over the circle for each width, from coupled paths.
pub fn run_var_diff(n: usize, widths: &[f64], trials: u64, seed: u64, grid_factor: f64) -> Result<VarDiffTable> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("at least {MIN_TRIALS} trials are needed")));
    }
    let start = Instant::now();
    let mut rows = Vec::with_capacity(widths.len());
    for &w in widths {
        let design = SpectralDesign::new(n, w, DEFAULT_TAIL_EPS)?;
        let m = design.m();
        let hint = design.truncation_index();
        let circle = (0.0, TAU * m);
        let diffs: Vec<Result<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let (base, moll) = design.sample(seed, t);
                let bp = base.path();
                let z = count_sign_changes(&bp, circle, grid_factor, bp.bandwidth())?.count as f64;
                let zm = count_sign_changes(&moll.path(), circle, grid_factor, hint)?.count as f64;
                Ok(z - zm)
            })
            .collect();
        let d: Vec<f64> = diffs.into_iter().collect::<Result<_>>()?;
        let (mean, var, _, fourth) = moments(&d);
        let se = ((fourth - var * var).max(0.0) / trials as f64).sqrt();
        rows.push(VarDiffRow {
            width: w,
            truncation: hint,
            mean_difference: mean,
            variance: var,
            variance_std_error: se,
            ratio: var / n as f64,
            ratio_std_error: se / n as f64,
        });
    }
    Ok(VarDiffTable {
        degree: n,
        trials,
        seed,
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
