use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rotsum::arithmetic::{continued_fraction, estimate_levy_constant, ArithmeticError, CFExpansion, PointSpec};
use rotsum::distributions::{
    fit_cauchy, fit_q_gaussian_with, ks_distance, moment_summary, normal_cdf, QGaussianFitOptions,
};
use rotsum::dynamics::{ergodic_sum_series, Observable, OrbitSpec, Storage};
use rotsum::kesten::{compute_i, compute_rho, IMethod, KestenComputation, IValue, TauSource};
use serde::Serialize;
use serde_json::json;

use crate::config::{observable, parse_point, ObsKind};
use crate::error::{usage, CliError, CliResult};
use crate::manifest::write_all;
use crate::svg::{decimate, line_chart, Curve};
use crate::Format;

/// Longest series written without striding.
pub const MAX_FULL_SERIES: u64 = 1_000_000;

#[derive(Debug, Args)]
pub struct CfArgs {
    /// Built-in name (golden, e-2, pi-3, sqrt2-1) or decimal literal
    pub x: String,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
}

#[derive(Serialize)]
struct CfRow {
    n: usize,
    a: String,
    p: String,
    q: String,
}

fn cf_rows(cf: &CFExpansion) -> Vec<CfRow> {
    cf.coefficients
        .iter()
        .zip(&cf.convergents)
        .enumerate()
        .map(|(i, (a, (p, q)))| CfRow { n: i + 1, a: a.to_string(), p: p.to_string(), q: q.to_string() })
        .collect()
}

pub fn cmd_cf(args: &CfArgs, format: Option<Format>) -> CliResult<()> {
    let spec: PointSpec = args.x.parse().map_err(|e| usage(format!("cannot parse '{}': {e}", args.x)))?;
    if args.depth < 1 {
        return Err(usage("--depth must be at least 1"));
    }
    let (cf, status) = match continued_fraction(&spec.precise(), args.depth) {
        Ok(cf) => (cf, "complete".to_string()),
        Err(ArithmeticError::RationalTermination { partial }) => (partial, "terminates".to_string()),
        Err(ArithmeticError::PrecisionExhausted { partial }) => {
            let s = format!("precision exhausted after {} terms", partial.depth());
            (partial, s)
        }
        Err(e) => return Err(usage(e.to_string())),
    };
    let rows = cf_rows(&cf);
    match format {
        Some(Format::Json) => {
            let out = json!({ "x": spec.to_string(), "depth": args.depth, "status": status, "expansion": rows });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
        }
        Some(Format::Csv) => {
            println!("n,a_n,p_n,q_n");
            for r in rows {
                println!("{},{},{},{}", r.n, r.a, r.p, r.q);
            }
        }
        None => {
            let note = if status == "complete" { String::new() } else { format!(" ({status})") };
            println!("x = {spec}");
            println!("{cf}{note}");
            println!("{:>4}  {:>12}  {:>24}  {:>24}", "n", "a_n", "p_n", "q_n");
            for r in rows {
                println!("{:>4}  {:>12}  {:>24}  {:>24}", r.n, r.a, r.p, r.q);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct SumArgs {
    #[arg(long, default_value = "0")]
    pub x: String,
    #[arg(long)]
    pub alpha: String,
    #[arg(long = "T")]
    pub horizon: u64,
    #[arg(long, value_enum)]
    pub obs: Option<ObsKind>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Also write an SVG trace
    #[arg(long)]
    pub plot: bool,
}

fn file_token(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn cmd_sum(args: &SumArgs, out_dir: &Path, format: Option<Format>) -> CliResult<()> {
    let x0 = parse_point(&args.x, "x")?;
    let alpha = parse_point(&args.alpha, "alpha")?;
    let obs = observable(args.obs, args.gamma.as_deref(), Observable::Sawtooth)?;
    let spec = OrbitSpec::new(x0, alpha, args.horizon, obs).map_err(|e| usage(e.to_string()))?;
    let storage = if args.horizon > MAX_FULL_SERIES {
        Storage::Strided(args.horizon.div_ceil(MAX_FULL_SERIES))
    } else {
        Storage::Full
    };
    let series = ergodic_sum_series(&spec, storage).map_err(|e| usage(e.to_string()))?;
    let stem = format!("sum_{}_{}_{}", file_token(&args.alpha), file_token(&args.x), args.horizon);
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    match format {
        Some(Format::Json) => {
            let body = serde_json::to_string_pretty(&series).expect("serializes");
            files.push((out_dir.join(format!("{stem}.json")), body));
        }
        _ => {
            let mut body = String::from("t,S_t\n");
            for (t, s) in &series.values {
                body.push_str(&format!("{t},{s:?}\n"));
            }
            files.push((out_dir.join(format!("{stem}.csv")), body));
        }
    }
    if args.plot {
        let curve = Curve { label: "S_t".into(), points: decimate(&series.values, 2000) };
        let title = format!("S_t, x = {}, alpha = {}", args.x, args.alpha);
        files.push((out_dir.join(format!("{stem}.svg")), line_chart(&title, "t", "S_t", &[curve])));
    }
    write_all(&files)?;
    let max_abs = series.sums().map(f64::abs).fold(0.0, f64::max);
    println!("S_T = {:?}", series.last());
    println!("max |S_t| = {max_abs:?} (stride {})", series.stride);
    for (p, _) in &files {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauChoice {
    Analytic,
    Estimated,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IChoice {
    Closed,
    Quadrature,
    Both,
}

#[derive(Debug, Args)]
pub struct KestenArgs {
    #[arg(long, value_enum, default_value_t = TauChoice::Analytic)]
    pub tau: TauChoice,
    #[arg(long = "I", value_enum, default_value_t = IChoice::Closed)]
    pub i: IChoice,
    /// Series truncation for the quadrature
    #[arg(long = "K", default_value_t = IMethod::DEFAULT_K)]
    pub k: u64,
    #[arg(long, default_value_t = IMethod::DEFAULT_PANELS)]
    pub panels: usize,
    /// Monte Carlo samples for the estimated tau
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
}

#[derive(Serialize)]
struct KestenReport {
    i: Vec<IValue>,
    tau: Vec<TauSource>,
    rho: Vec<KestenComputation>,
    i_reference: f64,
    rho_reference: f64,
}

pub fn cmd_kesten(args: &KestenArgs, seed: Option<u64>, format: Option<Format>) -> CliResult<()> {
    let mut i_values = Vec::new();
    if matches!(args.i, IChoice::Closed | IChoice::Both) {
        i_values.push(compute_i(IMethod::ClosedFormTriangle).map_err(|e| usage(e.to_string()))?);
    }
    if matches!(args.i, IChoice::Quadrature | IChoice::Both) {
        let m = IMethod::TruncatedSeriesQuadrature { k_max: args.k, panels: args.panels };
        i_values.push(compute_i(m).map_err(|e| usage(e.to_string()))?);
    }
    let mut taus = Vec::new();
    if matches!(args.tau, TauChoice::Analytic | TauChoice::Both) {
        taus.push(TauSource::Analytic);
    }
    if matches!(args.tau, TauChoice::Estimated | TauChoice::Both) {
        let seed = seed.ok_or_else(|| usage("--tau estimated needs --seed"))?;
        let est = estimate_levy_constant(args.samples, args.depth, seed).map_err(|e| usage(e.to_string()))?;
        taus.push(TauSource::Estimated(est));
    }
    let mut rhos = Vec::new();
    for t in &taus {
        for i in &i_values {
            rhos.push(compute_rho(t.clone(), *i).map_err(|e| CliError::Other(e.into()))?);
        }
    }
    let report = KestenReport { i: i_values, tau: taus, rho: rhos, i_reference: PI * PI / 24.0, rho_reference: 4.0 * PI };
    if format == Some(Format::Json) {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
        return Ok(());
    }
    let i_name = |m: &IMethod| match m {
        IMethod::ClosedFormTriangle => "closed form".to_string(),
        IMethod::TruncatedSeriesQuadrature { k_max, panels } => format!("quadrature K={k_max} {panels}x{panels}"),
    };
    let tau_name = |t: &TauSource| match t {
        TauSource::Analytic => "analytic".to_string(),
        TauSource::Estimated(e) => format!("estimated n={} depth={}", e.sample_count, e.depth),
    };
    println!("{:<34} {:>20} {:>12} {:>12}", "I", "value", "abs error", "bound");
    for v in &report.i {
        println!("{:<34} {:>20.15} {:>12.3e} {:>12.3e}", i_name(&v.method), v.value, (v.value - report.i_reference).abs(), v.error_bound);
    }
    println!();
    println!("{:<34} {:>20} {:>12}", "tau", "value", "std error");
    for t in &report.tau {
        println!("{:<34} {:>20.15} {:>12.3e}", tau_name(t), t.value(), t.std_error());
    }
    println!();
    println!("{:<34} {:>20} {:>12} {:>12}", "rho (tau / I)", "value", "rel error", "bound");
    for r in &report.rho {
        let label = format!("{} / {}", tau_name(&r.tau_source), i_name(&r.i_method));
        let rel = (r.rho / report.rho_reference - 1.0).abs();
        println!("{label:<34} {:>20.15} {rel:>12.3e} {:>12.3e}", r.rho, r.error_bound);
    }
    println!("\nreference: I = pi^2/24 = {:.15}, rho = 4 pi = {:.15}", report.i_reference, report.rho_reference);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Cauchy,
    Gaussian,
    QGaussian,
    All,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with one sample per row
    pub file: PathBuf,
    /// Column name or zero-based index; defaults to the last column
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum, default_value_t = Family::All)]
    pub family: Family,
    /// Lower end of the q search range
    #[arg(long, default_value_t = 1.0)]
    pub q_min: f64,
}

pub fn read_column(path: &Path, column: Option<&str>) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    let first: Vec<&str> = lines.peek().map(|l| l.split(',').map(str::trim).collect()).unwrap_or_default();
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let width = first.len();
    let idx = match column {
        None => width.saturating_sub(1),
        Some(c) => match c.parse::<usize>() {
            Ok(i) => i,
            Err(_) if has_header => first.iter().position(|f| *f == c).ok_or_else(|| usage(format!("no column '{c}'")))?,
            Err(_) => return Err(usage(format!("no header row to look up column '{c}'"))),
        },
    };
    if has_header {
        lines.next();
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .nth(idx)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| usage(format!("row {}: no numeric value in column {idx}", i + 1)))
        })
        .collect()
}

pub fn cmd_fit(args: &FitArgs, format: Option<Format>) -> CliResult<()> {
    let xs = read_column(&args.file, args.column.as_deref())?;
    let mut out = serde_json::Map::new();
    out.insert("n".into(), json!(xs.len()));
    if matches!(args.family, Family::Cauchy | Family::All) {
        out.insert("cauchy".into(), json!(fit_cauchy(&xs)?));
    }
    if matches!(args.family, Family::Gaussian | Family::All) {
        let m = moment_summary(&xs)?;
        let sd = m.variance.sqrt();
        let ks = ks_distance(&xs, |y| normal_cdf((y - m.mean) / sd))?;
        out.insert("gaussian".into(), json!({ "mu": m.mean, "sigma": sd, "ks_distance": ks, "moments": m }));
    }
    if matches!(args.family, Family::QGaussian | Family::All) {
        let q = fit_q_gaussian_with(&xs, QGaussianFitOptions { q_min: args.q_min })?;
        out.insert("q_gaussian".into(), json!(q));
    }
    if format == Some(Format::Json) {
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        println!("n = {}", xs.len());
        if let Some(c) = out.get("cauchy") {
            println!("cauchy      rho = {}  ks = {}", c["rho"], c["ks_distance"]);
        }
        if let Some(g) = out.get("gaussian") {
            println!("gaussian    mu = {}  sigma = {}  ks = {}", g["mu"], g["sigma"], g["ks_distance"]);
        }
        if let Some(q) = out.get("q_gaussian") {
            println!("q-gaussian  q = {}  beta = {}  P(0) = {}", q["q"], q["beta"], q["p0"]);
        }
    }
    Ok(())
}
