use std::f64::consts::TAU;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use kacrice::analytic::kac_rice::{bleher_di_kernel, bleher_di_quadrature};
use kacrice::analytic::{expected_zeros, lambda2, variance_exact, variance_interval, CovarianceModel};
use kacrice::ensembles::{sample_qualls_trial, TrigPolynomial};
use kacrice::harness::{
    run_experiment, with_threads, Ensemble, ExperimentConfig, ExperimentKind, Results, WidthRule, SCHEMA_VERSION,
    TOOL_VERSION,
};
use kacrice::moments3::{third_moment_mc, Route, TripleKernel};
use kacrice::mollify::{l2_closeness_report, Mollifier};
use kacrice::scaling::{compute_c, r_star, c0_integrand, DEFAULT_C0_TOL};
use kacrice::zeros::{count_sign_changes, DEFAULT_GRID_FACTOR};
use kacrice::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "kacrice", version, about = "Zero statistics of random trigonometric polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Degrees, comma separated.
    #[arg(short = 'N', long = "degree", value_delimiter = ',', num_args = 1.., global = true)]
    degree: Vec<usize>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    /// Base interval `a b` inside [0, 2π].
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, global = true)]
    interval: Option<Vec<f64>>,
    /// Short-interval exponent: window length (b - a) N^-γ.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Mollifier widths: numbers or `N^β`, comma separated.
    #[arg(long = "mollify-m", value_delimiter = ',', global = true)]
    mollify_m: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_GRID_FACTOR, global = true)]
    grid_factor: f64,
    /// Quadrature or constant tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Qualls, global = true)]
    ensemble: EnsembleArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected number of zeros.
    Expect,
    /// Variance of the zero count by quadrature.
    Variance,
    /// The limiting constants c₀ and c.
    C0,
    /// Monte Carlo CLT on the base interval.
    Clt,
    /// Monte Carlo CLT on shrinking windows.
    CltShort,
    /// Var(Z - Z^M)/N from coupled paths.
    VarDiff,
    /// Three-point determinants and third moments.
    Moments3 {
        /// Intervals per unit degree for the third-moment run.
        #[arg(long, default_value_t = 1)]
        blocks: usize,
    },
    /// L² distances between covariances and their mollified versions.
    MollifyReport,
    /// Quick invariant checks.
    Selftest,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum EnsembleArg {
    Qualls,
    Dunnage,
}

/// A finished command: the JSON document and the rows of its CSV table.
struct Output {
    document: Value,
    rows: Vec<Value>,
    ok: bool,
}

fn envelope(command: &str, config: Value, results: Value, references: Value, start: Instant) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": TOOL_VERSION,
        "command": command,
        "config": config,
        "results": results,
        "references": references,
        "wall_time_s": start.elapsed().as_secs_f64(),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn degrees(c: &Common, default: &[usize]) -> Result<Vec<usize>> {
    let d = if c.degree.is_empty() { default.to_vec() } else { c.degree.clone() };
    if d.is_empty() {
        return Err(Error::InvalidParameter("no degrees given; use -N".into()));
    }
    if d.contains(&0) {
        return Err(Error::InvalidParameter("degrees must be positive".into()));
    }
    Ok(d)
}

fn interval(c: &Common) -> Result<(f64, f64)> {
    match c.interval.as_deref() {
        None => Ok((0.0, TAU)),
        Some(&[a, b]) if 0.0 <= a && a < b && b <= TAU => Ok((a, b)),
        Some(v) => Err(Error::InvalidParameter(format!("interval {v:?} must satisfy 0 ≤ a < b ≤ 2π"))),
    }
}

fn widths(c: &Common) -> Result<Vec<WidthRule>> {
    c.mollify_m.iter().map(|s| WidthRule::parse(s)).collect()
}

fn experiment(kind: ExperimentKind, c: &Common, default_trials: u64) -> Result<Output> {
    let mut config = ExperimentConfig::new(kind, degrees(c, &[])?);
    config.trials = c.trials.unwrap_or(default_trials);
    config.seed = c.seed;
    config.interval = interval(c)?;
    config.gamma = c.gamma;
    config.mollify = widths(c)?;
    config.grid_factor = c.grid_factor;
    if let Some(t) = c.tol {
        config.quad_tol = t;
    }
    config.threads = c.threads;
    config.ensemble = match c.ensemble {
        EnsembleArg::Qualls => Ensemble::Qualls,
        EnsembleArg::Dunnage => Ensemble::Dunnage,
    };
    let summary = run_experiment(&config)?;
    let rows = match &summary.results {
        Results::Clt(r) => r.iter().map(to_value).collect(),
        Results::Variance(v) => v.rows.iter().map(to_value).collect(),
        Results::VarDiff(tables) => tables
            .iter()
            .flat_map(|t| {
                t.rows.iter().map(move |r| {
                    let mut v = to_value(r);
                    v["degree"] = json!(t.degree);
                    v
                })
            })
            .collect(),
    };
    Ok(Output {
        document: to_value(&summary),
        rows,
        ok: true,
    })
}

fn expect(c: &Common) -> Result<Output> {
    let start = Instant::now();
    let (a, b) = interval(c)?;
    let mut rows = Vec::new();
    for n in degrees(c, &[])? {
        rows.push(json!({
            "degree": n,
            "lambda2": lambda2(n)?,
            "a": a,
            "b": b,
            "expected": expected_zeros(n, a, b)?,
        }));
    }
    let refs = json!([{"quantity": "expected", "method": "(b - a)√λ₂/π with λ₂ = (N+1)(2N+1)/6"}]);
    Ok(Output {
        document: envelope("expect", json!({"interval": [a, b]}), json!(rows), refs, start),
        rows,
        ok: true,
    })
}

fn variance(c: &Common) -> Result<Output> {
    let start = Instant::now();
    let (a, b) = interval(c)?;
    let tol = c.tol.unwrap_or(1e-9);
    let ns = degrees(c, &[])?;
    let reports: Vec<Result<_>> = with_threads(c.threads, || {
        use rayon::prelude::*;
        ns.par_iter()
            .map(|&n| if b - a >= TAU { variance_exact(n, tol) } else { variance_interval(n, b - a, tol) })
            .collect()
    })?;
    let mut rows = Vec::new();
    for r in reports {
        let r = r?;
        let mut v = to_value(&r);
        v["factorial_moment2"] = json!(r.factorial_moment2());
        v["ratio"] = json!(r.variance / r.degree as f64);
        rows.push(v);
    }
    let refs = json!([{"quantity": "variance", "method": "Kac-Rice second moment, adaptive Gauss-Kronrod on π-panels"}]);
    let config = json!({"interval": [a, b], "tol": tol});
    Ok(Output {
        document: envelope("variance", config, json!(rows), refs, start),
        rows,
        ok: true,
    })
}

fn c0(c: &Common) -> Result<Output> {
    let start = Instant::now();
    let tol = c.tol.unwrap_or(DEFAULT_C0_TOL);
    let est = compute_c(tol)?;
    let row = json!({
        "c": est.c,
        "c_error": est.error,
        "c0": est.c0.c0,
        "c0_error": est.c0.error,
        "cutoff": est.c0.cutoff,
        "tail_coefficient": est.c0.tail_coefficient,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    let refs = json!([
        {"quantity": "c0", "method": "π-panel Gauss-Kronrod on [0, X] plus fitted A/x² + B/x⁴ tail"},
        {"quantity": "c", "method": "4c₀/(3π) + 2/√3"},
    ]);
    Ok(Output {
        document: envelope("c0", json!({"tol": tol}), row.clone(), refs, start),
        rows: vec![row],
        ok: true,
    })
}

fn moments3(c: &Common, blocks: usize) -> Result<Output> {
    let start = Instant::now();
    let kernel = TripleKernel::new(CovarianceModel::sinc());
    let mut limits = Vec::new();
    for x in [0.1, 0.05, 0.02, 0.01] {
        let f = kernel.reduced_det(x, 2.0 * x, Route::Auto)?;
        let r1 = kernel.reduced_r1(x, 2.0 * x, Route::Auto)?;
        limits.push(json!({
            "x": x,
            "y": 2.0 * x,
            "f_reduced": f,
            "f_ratio_to_limit": f * 135.0,
            "r1_reduced": r1,
            "r1_ratio_to_limit": r1 * 212625.0,
        }));
    }
    let mut third = Vec::new();
    if !c.degree.is_empty() {
        let rules = widths(c)?;
        let rule = match rules.as_slice() {
            [] => WidthRule::Power(0.2),
            [r] => *r,
            _ => return Err(Error::InvalidParameter("moments3 takes one mollifier rule".into())),
        };
        let trials = c.trials.unwrap_or(200);
        for &n in &degrees(c, &[])? {
            let rep = with_threads(c.threads, || third_moment_mc(n, rule.width(n), blocks, trials, c.seed))??;
            third.push(json!({
                "degree": rep.degree,
                "width": rep.width,
                "intervals": rep.intervals,
                "interval_length": rep.interval_length,
                "trials": rep.trials,
                "pooled_mean": rep.pooled_mean,
                "pooled_third": rep.pooled_third,
                "max_third": rep.max_third,
                "full_circle_third": rep.full_circle_third,
            }));
        }
    }
    let mut rows: Vec<Value> = limits.iter().map(|v| tagged("limit", v)).collect();
    rows.extend(third.iter().map(|v| tagged("third_moment", v)));
    let refs = json!([
        {"quantity": "f_reduced", "method": "f(x,y)/(x²y²(y-x)²) for the sinc kernel; limit 1/135"},
        {"quantity": "r1_reduced", "method": "R₁/(x⁴y⁴(y-x)²) for the sinc kernel; limit 1/212625"},
        {"quantity": "pooled_third", "method": "Monte Carlo over mollified spectral paths, averaged over intervals"},
    ]);
    Ok(Output {
        document: envelope(
            "moments3",
            json!({"blocks": blocks, "seed": c.seed}),
            json!({"limits": limits, "third_moments": third}),
            refs,
            start,
        ),
        rows,
        ok: true,
    })
}

fn tagged(kind: &str, v: &Value) -> Value {
    let mut out = Map::new();
    out.insert("table".into(), json!(kind));
    if let Value::Object(m) = v {
        out.extend(m.clone());
    }
    Value::Object(out)
}

fn mollify_report(c: &Common) -> Result<Output> {
    let start = Instant::now();
    let ns = degrees(c, &[400])?;
    let rules = if c.mollify_m.is_empty() {
        [5.0, 10.0, 20.0, 40.0].map(WidthRule::Fixed).to_vec()
    } else {
        widths(c)?
    };
    let mut rows = Vec::new();
    for &n in &ns {
        let mut prev: Option<f64> = None;
        for rule in &rules {
            let w = rule.width(n);
            let rep = with_threads(c.threads, || l2_closeness_report(n, w))??;
            let moll = Mollifier::new(w, n as f64 + 0.5)?;
            let min_hat = (-10_000i64..=10_000).map(|k| moll.fourier(k)).fold(f64::INFINITY, f64::min);
            let mut v = to_value(&rep);
            v["ratio_to_previous"] = json!(prev.map(|p| p / rep.mollified_sq[0]));
            v["fourier_min"] = json!(min_hat);
            v["value_at_zero"] = json!(moll.value(0.0));
            v["support_radius"] = json!(moll.support_radius());
            prev = Some(rep.mollified_sq[0]);
            rows.push(v);
        }
    }
    let refs = json!([
        {"quantity": "mollified_sq", "method": "composite Simpson on [0, πm], doubled by evenness"},
        {"quantity": "fourier_min", "method": "closed-form Fourier coefficients over |n| ≤ 10⁴"},
    ]);
    Ok(Output {
        document: envelope("mollify-report", json!({}), json!(rows), refs, start),
        rows,
        ok: true,
    })
}

fn selftest(c: &Common) -> Result<Output> {
    let start = Instant::now();
    let mut checks: Vec<(&str, bool, String)> = Vec::new();

    let est = compute_c(DEFAULT_C0_TOL)?;
    checks.push(("constant c", (est.c - 0.55826).abs() < 2e-4, format!("c = {:.10}", est.c)));

    let k0 = bleher_di_kernel(0.0)?;
    let kq = bleher_di_quadrature(0.3, 1e-10)?;
    let k3 = bleher_di_kernel(0.3)?;
    checks.push((
        "absolute-product kernel",
        k0 == 4.0 && (kq - k3).abs() < 1e-8,
        format!("K(0) = {k0}, |closed - quadrature| at 0.3 = {:.2e}", (kq - k3).abs()),
    ));

    let mut exact = true;
    for n in [1usize, 25, 500] {
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        let p = TrigPolynomial::new(vec![0.0; n], b, 1.0)?;
        exact &= count_sign_changes(&p, (0.0, TAU), c.grid_factor, n)?.count == 2 * n;
    }
    checks.push(("cos Nt has 2N zeros", exact, "N ∈ {1, 25, 500}".into()));

    let mut over = 0;
    for t in 0..200 {
        let p = sample_qualls_trial(50, c.seed, t)?;
        if count_sign_changes(&p, (0.0, TAU), c.grid_factor, 50)?.count > 100 {
            over += 1;
        }
    }
    checks.push(("Bernstein bound", over == 0, format!("{over} of 200 paths above 2N")));

    let v = variance_exact(50, 1e-9)?;
    checks.push((
        "variance ratio near c",
        (v.variance / 50.0 - est.c).abs() < 0.05,
        format!("Var/N = {:.6}", v.variance / 50.0),
    ));

    let rs = r_star(1e-7)?;
    let ci = c0_integrand(1e-7)?;
    checks.push(("kernel limits", (rs - 1.0).abs() < 1e-6 && (ci + 1.0).abs() < 1e-6, format!("R*(0⁺) = {rs}, c₀ integrand = {ci}")));

    let kernel = TripleKernel::new(CovarianceModel::sinc());
    let f = kernel.reduced_det(0.02, 0.04, Route::Auto)? * 135.0;
    let r1 = kernel.reduced_r1(0.02, 0.04, Route::Auto)? * 212625.0;
    checks.push((
        "three-point limits",
        (f - 1.0).abs() < 0.02 && (r1 - 1.0).abs() < 0.02,
        format!("normalized ratios {f:.6}, {r1:.6}"),
    ));

    let moll = Mollifier::new(5.0, 400.5)?;
    let min_hat = (-10_000i64..=10_000).map(|k| moll.fourier(k)).fold(f64::INFINITY, f64::min);
    checks.push((
        "mollifier",
        (moll.value(0.0) - 1.0).abs() < 1e-12 && min_hat >= 0.0,
        format!("S(0) = {}, min Fourier = {min_hat:.3e}", moll.value(0.0)),
    ));

    let mut cfg = ExperimentConfig::new(ExperimentKind::Clt, vec![10]);
    cfg.trials = 400;
    cfg.seed = c.seed;
    let mut docs = Vec::new();
    for threads in [1, 3] {
        cfg.threads = Some(threads);
        let mut s = run_experiment(&cfg)?;
        s.wall_time_s = 0.0;
        if let Results::Clt(r) = &mut s.results {
            r.iter_mut().for_each(|d| d.wall_time_s = 0.0);
        }
        docs.push(serde_json::to_string(&s).expect("serializable"));
    }
    checks.push(("thread-count determinism", docs[0] == docs[1], "1 vs 3 threads".into()));

    let ok = checks.iter().all(|c| c.1);
    let rows: Vec<Value> = checks
        .iter()
        .map(|(name, pass, detail)| json!({"check": name, "pass": pass, "detail": detail}))
        .collect();
    for (name, pass, detail) in &checks {
        eprintln!("{} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
    }
    Ok(Output {
        document: envelope("selftest", json!({"seed": c.seed}), json!({"passed": ok, "checks": rows}), json!([]), start),
        rows,
        ok,
    })
}

/// Scalars and short arrays of an object, with nested keys joined by `.`.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) if a.len() <= 4 => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::Array(_) => {}
        Value::Null => out.push((prefix.into(), String::new())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn write_csv<W: Write>(rows: &[Value], w: W) -> std::io::Result<()> {
    let flat: Vec<Vec<(String, String)>> = rows
        .iter()
        .map(|r| {
            let mut out = Vec::new();
            flatten("", r, &mut out);
            out
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(&header)?;
    for row in &flat {
        let rec = header.iter().map(|h| row.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()));
        wr.write_record(rec)?;
    }
    wr.flush()
}

fn emit(out: &Output, c: &Common) -> std::io::Result<()> {
    let mut sink: Box<dyn Write> = match &c.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match c.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &out.document)?;
            writeln!(sink)?;
        }
        Format::Csv => write_csv(&out.rows, &mut sink)?,
    }
    sink.flush()
}

fn run(cli: &Cli) -> Result<Output> {
    let c = &cli.common;
    match &cli.command {
        Command::Expect => expect(c),
        Command::Variance => variance(c),
        Command::C0 => c0(c),
        Command::Clt => experiment(ExperimentKind::Clt, c, 1000),
        Command::CltShort => experiment(ExperimentKind::CltShort, c, 1000),
        Command::VarDiff => experiment(ExperimentKind::VarDiff, c, 1000),
        Command::Moments3 { blocks } => moments3(c, *blocks),
        Command::MollifyReport => mollify_report(c),
        Command::Selftest => selftest(c),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&out, &cli.common) {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(1);
            }
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(Error::Invariant(String::new()).exit_code() as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
