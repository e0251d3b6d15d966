use clap::ValueEnum;
use rotsum::arithmetic::UnitPoint;
use rotsum::distributions::{
    cauchy_cdf, cauchy_pdf, ks_mid_distance_sorted, normal_cdf, normal_pdf, q_gaussian_pdf, EmpiricalDist,
};
use rotsum::dynamics::Observable;
use rotsum::experiments::{self as ex, ExperimentConfig, ExperimentKind, NormalizationPolicy, WindowSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{observable, parse_grid, parse_point, parse_policy, FlatConfig, ObsKind, PolicyKind};
use crate::error::{usage, CliError, CliResult};
use crate::svg::{histogram_chart, line_chart, sample_curve, Curve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Annealed spatial Cauchy limit of S_T / ln T
    Kesten,
    AnnealedTemporal,
    Temporal,
    Density,
    Beck,
    Probe,
    Tt,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Kesten => "kesten",
            Kind::AnnealedTemporal => "annealed-temporal",
            Kind::Temporal => "temporal",
            Kind::Density => "density",
            Kind::Beck => "beck",
            Kind::Probe => "probe",
            Kind::Tt => "tt",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Kind::value_variants().iter().copied().find(|k| k.name() == s)
    }

    pub fn is_random(self) -> bool {
        matches!(self, Kind::Kesten | Kind::AnnealedTemporal | Kind::Density | Kind::Tt)
    }
}

fn set<T: Clone>(slot: &mut Option<T>, v: T) {
    if slot.is_none() {
        *slot = Some(v);
    }
}

/// Fill in every key the experiment reads, so that the manifest is self-contained.
pub fn resolve(kind: Kind, mut c: FlatConfig) -> CliResult<FlatConfig> {
    let s = |v: &str| v.to_string();
    match kind {
        Kind::Kesten | Kind::Tt => {
            set(&mut c.n, ex::DEFAULT_N);
            let t = if kind == Kind::Tt { ex::TT_DEFAULT_HORIZON } else { ex::DEFAULT_HORIZON };
            set(&mut c.horizon, t);
            set(&mut c.alpha, s("random"));
            set(&mut c.x, s("random"));
            set(&mut c.obs, ObsKind::Sawtooth);
        }
        Kind::AnnealedTemporal => {
            set(&mut c.n, ex::DEFAULT_N);
            set(&mut c.horizon, ex::DEFAULT_HORIZON);
            set(&mut c.alpha, s("random"));
            set(&mut c.x, s("0"));
            set(&mut c.obs, ObsKind::Sawtooth);
        }
        Kind::Temporal => {
            set(&mut c.horizon, ex::DEFAULT_HORIZON);
            set(&mut c.alpha, s("golden"));
            set(&mut c.x, s("0"));
            set(&mut c.obs, if c.gamma.is_some() { ObsKind::Indicator } else { ObsKind::Sawtooth });
            set(&mut c.policy, PolicyKind::Empirical);
            if c.policy == Some(PolicyKind::Loglaw) && (c.u.is_none() || c.v.is_none()) {
                return Err(usage("--policy loglaw needs --u and --v"));
            }
        }
        Kind::Density => {
            set(&mut c.n, ex::DEFAULT_N);
            set(&mut c.alpha, s("golden"));
            set(&mut c.x, s("random"));
            set(&mut c.obs, ObsKind::Sawtooth);
            set(&mut c.bins, ex::DENSITY_BINS);
            if c.t.is_none() {
                return Err(usage("density needs --t"));
            }
        }
        Kind::Beck => {
            set(&mut c.alpha, s("sqrt2-1"));
            set(&mut c.x, s("0"));
            set(&mut c.obs, ObsKind::Indicator);
            set(&mut c.grid, s("10:22"));
        }
        Kind::Probe => {
            set(&mut c.horizon, ex::DEFAULT_HORIZON);
            set(&mut c.alpha, s("pi-3"));
            set(&mut c.x, s("0"));
            set(&mut c.obs, ObsKind::Sawtooth);
            set(&mut c.windows, s("dyadic"));
            match c.windows.as_deref() {
                Some("dyadic") => set(&mut c.min_exponent, 10),
                Some("convergents") => set(&mut c.min_len, 100),
                _ => {}
            }
        }
    }
    if c.obs == Some(ObsKind::Indicator) {
        set(&mut c.gamma, s("0.5"));
    }
    Ok(c)
}

/// Result of one experiment, ready to be written.
pub struct Outcome {
    pub stats: Value,
    /// Horizon used in file names.
    pub horizon: u64,
    pub csv: String,
    pub svg: Option<String>,
}

fn base_config(kind: ExperimentKind, c: &FlatConfig, seed: u64, workers: usize) -> CliResult<ExperimentConfig> {
    let d = ExperimentConfig::for_kind(kind, seed);
    Ok(ExperimentConfig {
        kind,
        n: c.n.unwrap_or(1),
        horizon: c.horizon.unwrap_or(d.horizon),
        alpha: parse_policy(c.alpha.as_deref(), d.alpha, "alpha")?,
        x: parse_policy(c.x.as_deref(), d.x, "x")?,
        observable: observable(c.obs, c.gamma.as_deref(), Observable::Sawtooth)?,
        seed,
        workers,
    })
}

fn fixed_point(s: Option<&str>, what: &str) -> CliResult<UnitPoint> {
    parse_point(s.ok_or_else(|| usage(format!("{what} is required")))?, what)
}

pub fn run(kind: Kind, c: &FlatConfig, seed: u64, workers: usize) -> CliResult<Outcome> {
    match kind {
        Kind::Kesten => {
            let cfg = base_config(ExperimentKind::AnnealedSpatial, c, seed, workers)?;
            let r = ex::run_annealed_spatial(&cfg)?;
            cauchy_outcome("annealed spatial S_T / ln T", &r.dist, ex::KESTEN_RHO, r.evaluations, cfg.horizon, true)
        }
        Kind::AnnealedTemporal => {
            let cfg = base_config(ExperimentKind::AnnealedTemporal, c, seed, workers)?;
            let r = ex::run_annealed_temporal(&cfg)?;
            cauchy_outcome("annealed temporal S_t / ln T", &r.dist, ex::annealed_temporal_rho(), r.evaluations, cfg.horizon, false)
        }
        Kind::Temporal => temporal(c, seed, workers),
        Kind::Density => density(c, seed, workers),
        Kind::Beck => beck(c, seed, workers),
        Kind::Probe => probe(c),
        Kind::Tt => tt(c, seed, workers),
    }
}

fn histogram_bars(d: &EmpiricalDist) -> Vec<(f64, f64, f64)> {
    d.histogram
        .bins
        .iter()
        .zip(d.histogram.densities())
        .map(|(b, dens)| (b.left, b.right, dens))
        .collect()
}

fn cauchy_outcome(title: &str, d: &EmpiricalDist, reference_rho: f64, evaluations: u64, horizon: u64, q_fit: bool) -> CliResult<Outcome> {
    let fit = d.fit_cauchy()?;
    let mut abs: Vec<f64> = d.samples.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median_abs = rotsum::distributions::quantile_sorted(&abs, 0.5);
    let grid: Vec<f64> = (1..=40).map(|i| i as f64 * 0.01).collect();
    let mut stats = json!({
        "n": d.len(),
        "horizon": horizon,
        "evaluations": evaluations,
        "median": d.quantile(0.5),
        "median_abs": median_abs,
        "reference_median_abs": 1.0 / reference_rho,
        "cauchy_fit": fit,
        "reference_rho": reference_rho,
        "ks_vs_reference": d.ks_against(|y| cauchy_cdf(y, reference_rho)),
        "symmetry_gap": d.symmetry_gap(&grid),
    });
    let (lo, hi) = (d.histogram.bins[0].left, d.histogram.bins.last().unwrap().right);
    let mut overlays = vec![
        Curve { label: format!("Cauchy, fitted rho={:.3}", fit.rho), points: sample_curve(lo, hi, 400, |y| cauchy_pdf(y, fit.rho)) },
        Curve { label: format!("Cauchy, rho={reference_rho:.3}"), points: sample_curve(lo, hi, 400, |y| cauchy_pdf(y, reference_rho)) },
    ];
    if q_fit {
        let q = rotsum::distributions::fit_q_gaussian(&d.samples)?;
        stats["q_gaussian_fit"] = json!(q);
        overlays.push(Curve {
            label: format!("q-Gaussian, q={:.3}", q.q),
            points: sample_curve(lo, hi, 400, |y| q_gaussian_pdf(y, q.q, q.beta).unwrap_or(f64::NAN)),
        });
    }
    Ok(Outcome {
        stats,
        horizon,
        csv: d.histogram.to_csv(),
        svg: Some(histogram_chart(title, "value", &histogram_bars(d), &overlays)),
    })
}

fn temporal(c: &FlatConfig, seed: u64, workers: usize) -> CliResult<Outcome> {
    let cfg = base_config(ExperimentKind::Temporal, c, seed, workers)?;
    let policy = match c.policy {
        Some(PolicyKind::Loglaw) => NormalizationPolicy::LogLaw { u: c.u.unwrap_or(0.0), v: c.v.unwrap_or(1.0) },
        _ => NormalizationPolicy::EmpiricalMeanStd,
    };
    let r = ex::run_temporal(&cfg, policy)?;
    if r.is_flagged() {
        return Err(CliError::Degenerate(format!(
            "rotation is periodic or output is finitely supported (period {:?}, {} distinct values)",
            r.period, r.distinct_values
        )));
    }
    let m = r.dist.moments()?;
    let stats = json!({
        "horizon": cfg.horizon,
        "evaluations": r.evaluations,
        "normalization": r.normalization,
        "moments": m,
        "ks_vs_normal": r.dist.ks_against(normal_cdf),
        "ks_mid_vs_normal": ks_mid_distance_sorted(&r.dist.samples, normal_cdf),
        "period": r.period,
        "distinct_values": r.distinct_values,
    });
    let (lo, hi) = (r.dist.histogram.bins[0].left, r.dist.histogram.bins.last().unwrap().right);
    let overlays = [Curve { label: "standard normal".into(), points: sample_curve(lo, hi, 400, normal_pdf) }];
    Ok(Outcome {
        stats,
        horizon: cfg.horizon,
        csv: r.dist.histogram.to_csv(),
        svg: Some(histogram_chart("temporal (S_t - U_T) / V_T", "z", &histogram_bars(&r.dist), &overlays)),
    })
}

fn density(c: &FlatConfig, seed: u64, workers: usize) -> CliResult<Outcome> {
    let cfg = base_config(ExperimentKind::SpatialDensity, c, seed, workers)?;
    let t = c.t.expect("resolved");
    let d = ex::run_spatial_density(&cfg, t, c.bins)?;
    let stats = json!({
        "n": cfg.n,
        "t": t,
        "evaluations": d.evaluations,
        "mean": d.mean,
        "std_dev": d.std_dev,
        "symmetry_defect": d.symmetry_defect,
        "flatness": d.flatness,
        "underflow": d.histogram.underflow,
        "overflow": d.histogram.overflow,
    });
    let bars: Vec<(f64, f64, f64)> = d
        .histogram
        .bins
        .iter()
        .zip(d.histogram.densities())
        .map(|(b, v)| (b.left, b.right, v))
        .collect();
    let overlays = [Curve { label: "standard normal".into(), points: sample_curve(bars[0].0, bars[bars.len() - 1].1, 400, normal_pdf) }];
    Ok(Outcome {
        stats,
        horizon: t,
        csv: d.histogram.to_csv(),
        svg: Some(histogram_chart(&format!("standardized S_t over x, t = {t}"), "z", &bars, &overlays)),
    })
}

fn beck(c: &FlatConfig, seed: u64, workers: usize) -> CliResult<Outcome> {
    let cfg = base_config(ExperimentKind::BeckScaling, c, seed, workers)?;
    let grid = parse_grid(c.grid.as_deref().expect("resolved"))?;
    let r = ex::run_beck_scaling(&cfg, &grid)?;
    let horizon = r.points.last().map(|p| p.horizon).unwrap_or(0);
    let mut csv = String::from("T,ln_T,U_T,V_T\n");
    for p in &r.points {
        csv.push_str(&format!("{},{:?},{:?},{:?}\n", p.horizon, p.ln_horizon, p.u_t, p.v_t));
    }
    let stats = json!({
        "evaluations": r.evaluations,
        "points": r.points,
        "u_fit": r.u_fit,
        "v2_fit": r.v2_fit,
        "u": r.u,
        "v": r.v,
        "v_std_error": r.v_std_error,
    });
    let curves = [
        Curve { label: "U_T".into(), points: r.points.iter().map(|p| (p.ln_horizon, p.u_t)).collect() },
        Curve { label: "V_T^2".into(), points: r.points.iter().map(|p| (p.ln_horizon, p.v_t * p.v_t)).collect() },
    ];
    Ok(Outcome { stats, horizon, csv, svg: Some(line_chart("temporal centring and spread", "ln T", "value", &curves)) })
}

fn parse_windows(c: &FlatConfig) -> CliResult<WindowSpec> {
    match c.windows.as_deref().expect("resolved") {
        "dyadic" => Ok(WindowSpec::Dyadic { min_exponent: c.min_exponent.unwrap_or(10) }),
        "convergents" => Ok(WindowSpec::Convergents { min_len: c.min_len.unwrap_or(100) }),
        list => list
            .split(',')
            .map(|w| {
                let (a, b) = w.split_once('-').ok_or_else(|| usage(format!("bad window '{w}'")))?;
                let p = |v: &str| v.trim().parse::<u64>().map_err(|_| usage(format!("bad window '{w}'")));
                Ok((p(a)?, p(b)?))
            })
            .collect::<CliResult<Vec<_>>>()
            .map(WindowSpec::Explicit),
    }
}

fn probe(c: &FlatConfig) -> CliResult<Outcome> {
    let x0 = fixed_point(c.x.as_deref(), "x")?;
    let alpha = fixed_point(c.alpha.as_deref(), "alpha")?;
    let obs = observable(c.obs, c.gamma.as_deref(), Observable::Sawtooth)?;
    let horizon = c.horizon.expect("resolved");
    let r = ex::run_nonconvergence_probe(x0, alpha, obs, &parse_windows(c)?, horizon)?;
    let mut csv = String::from("window_a,window_b,a_start,a_end,b_start,b_end,ks\n");
    for i in 0..r.windows.len() {
        for j in i + 1..r.windows.len() {
            let (a, b) = (r.windows[i], r.windows[j]);
            csv.push_str(&format!("{i},{j},{},{},{},{},{:?}\n", a.0, a.1, b.0, b.1, r.ks[i][j]));
        }
    }
    let stats = json!({
        "horizon": horizon,
        "evaluations": r.evaluations,
        "windows": r.windows,
        "ks": r.ks,
        "max_ks": r.max_ks,
    });
    Ok(Outcome { stats, horizon, csv, svg: None })
}

fn tt(c: &FlatConfig, seed: u64, workers: usize) -> CliResult<Outcome> {
    let cfg = base_config(ExperimentKind::TtProtocol, c, seed, workers)?;
    let r = ex::run_tt_protocol(&cfg)?;
    let z = (r.mean_position - 0.5) / r.mean_position_iid_se;
    let mut stats = serde_json::to_value(&r).expect("report serializes");
    stats["mean_position_z"] = json!(z);
    let rows = [
        ("mean_position", r.mean_position),
        ("mean_position_z", z),
        ("p0_raw", r.p0_raw),
        ("q_fit", r.q_fit),
        ("beta_fit", r.beta_fit),
        ("p0_log_scaled", r.p0_log_scaled),
        ("log_scaled_q", r.log_scaled_fit.q),
        ("log_scaled_cauchy_rho", r.log_scaled_cauchy.rho),
        ("reference_q", r.reference_q),
        ("reference_p0", r.reference_p0),
        ("reported_q", r.reported_q),
        ("reported_p0", r.reported_p0),
    ];
    let mut csv = String::from("quantity,value\n");
    for (k, v) in rows {
        csv.push_str(&format!("{k},{v:?}\n"));
    }
    Ok(Outcome { stats, horizon: cfg.horizon, csv, svg: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip_names() {
        for k in Kind::value_variants() {
            assert_eq!(Kind::from_name(k.name()), Some(*k));
        }
    }

    #[test]
    fn resolve_fills_defaults() {
        let c = resolve(Kind::Beck, FlatConfig::default()).unwrap();
        assert_eq!(c.alpha.as_deref(), Some("sqrt2-1"));
        assert_eq!(c.gamma.as_deref(), Some("0.5"));
        assert!(resolve(Kind::Density, FlatConfig::default()).is_err());
        let loglaw = FlatConfig { policy: Some(PolicyKind::Loglaw), ..Default::default() };
        assert!(resolve(Kind::Temporal, loglaw).is_err());
    }
}
