//! Flat run configuration. Every key has a flag of the same name; a config
//! file supplies defaults and flags override it key by key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use rotsum::arithmetic::{PointSpec, UnitPoint};
use rotsum::dynamics::Observable;
use rotsum::experiments::PointPolicy;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedArg {
    Value(u64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl FromStr for SeedArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(SeedArg::Auto(AutoTag::Auto));
        }
        s.parse().map(SeedArg::Value).map_err(|_| format!("seed must be an unsigned integer or 'auto', got '{s}'"))
    }
}

impl fmt::Display for SeedArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedArg::Value(v) => write!(f, "{v}"),
            SeedArg::Auto(_) => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ObsKind {
    Sawtooth,
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Empirical,
    Loglaw,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    /// Sample count
    #[arg(long = "N")]
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Horizon
    #[arg(long = "T")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Fixed time for the spatial density
    #[arg(long = "t")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    /// Rotation number: a built-in name, a decimal, or 'random'
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    /// Initial point: a built-in name, a decimal, or 'random'
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs: Option<ObsKind>,
    /// Indicator interval length
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    /// Histogram bins (density)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Horizon grid: 'lo:hi' for 2^lo..2^hi, or a comma list
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Probe windows: 'dyadic', 'convergents', or 'a-b,c-d,...'
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_exponent: Option<u32>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_len: Option<u64>,
    /// Temporal normalization
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    /// LogLaw centering coefficient
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    /// LogLaw scaling coefficient
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedArg>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl FlatConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&self, over: &FlatConfig) -> FlatConfig {
        let mut base = serde_json::to_value(self).expect("config serializes");
        if let (Value::Object(b), Value::Object(o)) = (&mut base, serde_json::to_value(over).expect("config serializes")) {
            b.extend(o);
        }
        serde_json::from_value(base).expect("merged config is valid")
    }
}

pub fn parse_point(s: &str, what: &str) -> CliResult<UnitPoint> {
    s.parse::<PointSpec>()
        .map(|p| p.point())
        .map_err(|e| usage(format!("cannot parse {what} '{s}': {e}")))
}

pub fn parse_policy(s: Option<&str>, default: PointPolicy, what: &str) -> CliResult<PointPolicy> {
    match s {
        None => Ok(default),
        Some(r) if r.eq_ignore_ascii_case("random") => Ok(PointPolicy::Random),
        Some(v) => parse_point(v, what).map(PointPolicy::Fixed),
    }
}

pub fn observable(kind: Option<ObsKind>, gamma: Option<&str>, default: Observable) -> CliResult<Observable> {
    match kind {
        None if gamma.is_none() => Ok(default),
        Some(ObsKind::Sawtooth) if gamma.is_some() => Err(usage("--gamma only applies to the indicator observable")),
        Some(ObsKind::Sawtooth) => Ok(Observable::Sawtooth),
        // an explicit gamma implies the indicator
        _ => {
            let gamma = match gamma {
                Some(g) => parse_point(g, "gamma")?,
                None => UnitPoint::HALF,
            };
            Observable::indicator(gamma).map_err(|e| usage(e.to_string()))
        }
    }
}

pub fn parse_grid(s: &str) -> CliResult<Vec<u64>> {
    if let Some((lo, hi)) = s.split_once(':') {
        let lo: u32 = lo.trim().parse().map_err(|_| usage(format!("bad grid '{s}'")))?;
        let hi: u32 = hi.trim().parse().map_err(|_| usage(format!("bad grid '{s}'")))?;
        if lo > hi || hi > 40 {
            return Err(usage(format!("grid exponents must satisfy lo <= hi <= 40, got '{s}'")));
        }
        return Ok(rotsum::experiments::dyadic_grid(lo, hi));
    }
    s.split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| usage(format!("bad grid entry '{v}'"))))
        .collect()
}
