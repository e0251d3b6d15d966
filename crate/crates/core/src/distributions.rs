//! Empirical distributions and the parametric families they are compared with.
//!
//! The Cauchy law is parametrized by its inverse scale `rho`: density
//! `rho / pi / (1 + rho^2 y^2)`, quartiles at `±1/rho`. The q-Gaussian
//! `sqrt(beta) / C_q * exp_q(-beta s^2)` reduces to it at `q = 2`, `beta = rho^2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributionError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate sample: interquartile range is zero")]
    DegenerateSample,
    #[error("q = {0} is outside the normalizable range")]
    BadQ(f64),
    #[error("fit left the admissible region (q = {q}, beta = {beta})")]
    FitDiverged { q: f64, beta: f64 },
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("invalid histogram binning: {0}")]
    BadBinning(String),
}

pub fn cauchy_cdf(y: f64, rho: f64) -> f64 {
    0.5 + (rho * y).atan() / PI
}

pub fn cauchy_pdf(y: f64, rho: f64) -> f64 {
    rho / PI / (1.0 + rho * rho * y * y)
}

pub fn cauchy_quantile(p: f64, rho: f64) -> f64 {
    (PI * (p - 0.5)).tan() / rho
}

pub fn normal_cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// `|q - 1|` below which the Gaussian limit is used.
const Q_GAUSSIAN_EPS: f64 = 1e-9;

/// Lowest `q` the fitter will explore; below 1 the q-Gaussian has compact support.
pub const Q_FLOOR: f64 = 0.5;

/// Normalization `C_q` of the q-Gaussian, in closed form.
///
/// `C_q = sqrt(pi) Γ((3-q)/(2(q-1))) / (sqrt(q-1) Γ(1/(q-1)))` for `1 < q < 3`,
/// `sqrt(pi)` at `q = 1`, and the compact-support expression for `q < 1`.
pub fn q_normalization(q: f64) -> Result<f64, DistributionError> {
    ln_q_normalization(q).map(f64::exp)
}

fn ln_q_normalization(q: f64) -> Result<f64, DistributionError> {
    if !(Q_FLOOR..3.0).contains(&q) {
        return Err(DistributionError::BadQ(q));
    }
    let half_ln_pi = 0.5 * PI.ln();
    if (q - 1.0).abs() < Q_GAUSSIAN_EPS {
        return Ok(half_ln_pi);
    }
    if q > 1.0 {
        let d = q - 1.0;
        Ok(half_ln_pi + libm::lgamma((3.0 - q) / (2.0 * d)) - 0.5 * d.ln() - libm::lgamma(1.0 / d))
    } else {
        let d = 1.0 - q;
        Ok(std::f64::consts::LN_2 + half_ln_pi + libm::lgamma(1.0 / d)
            - (3.0 - q).ln()
            - 0.5 * d.ln()
            - libm::lgamma((3.0 - q) / (2.0 * d)))
    }
}

/// Log of `exp_q(-beta s^2)`; `-inf` outside the support when `q < 1`.
fn ln_exp_q(s: f64, q: f64, beta: f64) -> f64 {
    let u = beta * s * s;
    if (q - 1.0).abs() < Q_GAUSSIAN_EPS {
        return -u;
    }
    let d = q - 1.0;
    let base = d * u;
    if base <= -1.0 {
        return f64::NEG_INFINITY;
    }
    -base.ln_1p() / d
}

pub fn q_gaussian_pdf(s: f64, q: f64, beta: f64) -> Result<f64, DistributionError> {
    let ln_c = ln_q_normalization(q)?;
    Ok((0.5 * beta.ln() - ln_c + ln_exp_q(s, q, beta)).exp())
}

/// Exact log-likelihood of the sample under `(q, beta)`.
pub fn q_gaussian_log_likelihood(samples: &[f64], q: f64, beta: f64) -> Result<f64, DistributionError> {
    let ln_c = ln_q_normalization(q)?;
    let per_point = 0.5 * beta.ln() - ln_c;
    let mut total = 0.0;
    for &s in samples {
        total += ln_exp_q(s, q, beta);
    }
    Ok(total + per_point * samples.len() as f64)
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>, DistributionError> {
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(DistributionError::NonFinite);
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Linear-interpolation quantile of an already sorted sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Kolmogorov–Smirnov distance `sup |F_n - F|` for an already sorted sample.
pub fn ks_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Distance from `F` to the mid-distribution `(F_n(x-) + F_n(x)) / 2` at the
/// sample atoms. Equals the KS distance up to `1/(2n)` for continuous samples
/// and discounts the jumps of lattice-valued ones.
pub fn ks_mid_distance_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let j = i + sorted[i..].partition_point(|&v| v <= x);
        let mid = (i + j) as f64 / (2.0 * n);
        d = d.max((mid - cdf(x)).abs());
        i = j;
    }
    d
}

pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64, DistributionError> {
    if samples.is_empty() {
        return Err(DistributionError::TooFewSamples { need: 1, got: 0 });
    }
    Ok(ks_distance_sorted(&sorted_finite(samples)?, cdf))
}

/// Two-sample KS distance between sorted samples.
pub fn ks_two_sample_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyFit {
    pub rho: f64,
    pub ks_distance: f64,
}

/// Quartile estimate `rho = 2 / IQR`, with the KS distance to the fitted law.
pub fn fit_cauchy(samples: &[f64]) -> Result<CauchyFit, DistributionError> {
    if samples.len() < 100 {
        return Err(DistributionError::TooFewSamples { need: 100, got: samples.len() });
    }
    let sorted = sorted_finite(samples)?;
    fit_cauchy_sorted(&sorted)
}

pub(crate) fn fit_cauchy_sorted(sorted: &[f64]) -> Result<CauchyFit, DistributionError> {
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    if iqr <= 0.0 {
        return Err(DistributionError::DegenerateSample);
    }
    let rho = 2.0 / iqr;
    Ok(CauchyFit {
        rho,
        ks_distance: ks_distance_sorted(sorted, |y| cauchy_cdf(y, rho)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianFit {
    pub q: f64,
    pub beta: f64,
    pub c_q: f64,
    pub log_likelihood: f64,
    /// Peak density `sqrt(beta) / C_q`.
    pub p0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianFitOptions {
    /// Lower end of the admissible `q` range (the upper end is always 3).
    pub q_min: f64,
}

impl Default for QGaussianFitOptions {
    fn default() -> Self {
        QGaussianFitOptions { q_min: 1.0 }
    }
}

const Q_GRID_MAX: f64 = 2.9;
const BETA_GRID_POINTS: usize = 41;
const BETA_GRID_DECADES: f64 = 2.0;
const GRID_SUBSAMPLE: usize = 20_000;
const NM_MAX_ITER: usize = 400;
const NM_TOL: f64 = 1e-10;

/// Maximum-likelihood q-Gaussian fit with default options (`q` in `[1, 3)`).
pub fn fit_q_gaussian(samples: &[f64]) -> Result<QGaussianFit, DistributionError> {
    fit_q_gaussian_with(samples, QGaussianFitOptions::default())
}

/// Maximum-likelihood q-Gaussian fit.
///
/// Stage one scans `q` in steps of 0.1 from `q_min` to 2.9 against 41
/// log-spaced `beta` values spanning two decades either side of the
/// quartile-based scale `(2/IQR)^2`, on an evenly strided subsample of the
/// sorted data. Stage two runs Nelder–Mead on `(q, ln beta)` over the full
/// sample from the best grid point.
pub fn fit_q_gaussian_with(
    samples: &[f64],
    opts: QGaussianFitOptions,
) -> Result<QGaussianFit, DistributionError> {
    if samples.len() < 1000 {
        return Err(DistributionError::TooFewSamples { need: 1000, got: samples.len() });
    }
    if !(Q_FLOOR..3.0).contains(&opts.q_min) {
        return Err(DistributionError::BadQ(opts.q_min));
    }
    let sorted = sorted_finite(samples)?;
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    if iqr <= 0.0 {
        return Err(DistributionError::DegenerateSample);
    }
    let beta_ref = (2.0 / iqr).powi(2);

    let stride = (sorted.len() / GRID_SUBSAMPLE).max(1);
    let coarse: Vec<f64> = sorted.iter().step_by(stride).copied().collect();
    let neg_ll = |data: &[f64], q: f64, ln_beta: f64| -> f64 {
        if q < opts.q_min || q >= 3.0 {
            return f64::INFINITY;
        }
        match q_gaussian_log_likelihood(data, q, ln_beta.exp()) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => f64::INFINITY,
        }
    };

    let mut best = (f64::INFINITY, opts.q_min, beta_ref.ln());
    let q_steps = ((Q_GRID_MAX - opts.q_min) / 0.1).round() as usize;
    for qi in 0..=q_steps {
        let q = opts.q_min + 0.1 * qi as f64;
        for bi in 0..BETA_GRID_POINTS {
            let t = bi as f64 / (BETA_GRID_POINTS - 1) as f64;
            let ln_beta = beta_ref.ln() + (2.0 * t - 1.0) * BETA_GRID_DECADES * std::f64::consts::LN_10;
            let v = neg_ll(&coarse, q, ln_beta);
            if v < best.0 {
                best = (v, q, ln_beta);
            }
        }
    }

    let start = [best.1.max(opts.q_min + 0.01).min(2.98), best.2];
    let scale = [0.05, 0.2];
    let (point, value) = nelder_mead(|p| neg_ll(&sorted, p[0], p[1]), start, scale);
    let (q, beta) = (point[0], point[1].exp());
    if !value.is_finite() || !(opts.q_min..3.0).contains(&q) || !(beta > 0.0 && beta.is_finite()) {
        return Err(DistributionError::FitDiverged { q, beta });
    }
    let c_q = q_normalization(q)?;
    Ok(QGaussianFit {
        q,
        beta,
        c_q,
        log_likelihood: -value,
        p0: beta.sqrt() / c_q,
    })
}

/// Two-dimensional Nelder–Mead minimizer with standard coefficients.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], scale: [f64; 2]) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + scale[0], start[1]],
        [start[0], start[1] + scale[1]],
    ];
    let mut values = simplex.map(&f);
    for _ in 0..NM_MAX_ITER {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= NM_TOL * (1.0 + values[0].abs()) {
            break;
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best], values[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance.
    pub variance: f64,
    /// `m3 / m2^(3/2)`; zero for a constant sample.
    pub skewness: f64,
    /// `m4 / m2^2 - 3`; zero for a constant sample.
    pub excess_kurtosis: f64,
}

pub fn moment_summary(samples: &[f64]) -> Result<MomentSummary, DistributionError> {
    if samples.len() < 4 {
        return Err(DistributionError::TooFewSamples { need: 4, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(MomentSummary {
        n: samples.len(),
        mean,
        variance: m2 * n / (n - 1.0),
        skewness,
        excess_kurtosis,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
}

/// Fixed-width histogram. Samples outside the binned range are tallied in
/// `underflow`/`overflow`, so all counts together equal the sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<Bin>,
    pub underflow: u64,
    pub overflow: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Binning {
    /// Freedman–Diaconis width over the central 99.5% of the sample.
    FreedmanDiaconis,
    /// Given bin count over the central 99.5% of the sample.
    Count(usize),
    /// Given bin count over `[lo, hi)`.
    Range { lo: f64, hi: f64, count: usize },
}

/// Cap on the number of Freedman–Diaconis bins.
const MAX_AUTO_BINS: usize = 10_000;
const CENTRAL_TAIL: f64 = 0.0025;

impl Histogram {
    pub fn with_range(sorted: &[f64], lo: f64, hi: f64, count: usize) -> Result<Self, DistributionError> {
        if count == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(DistributionError::BadBinning(format!("[{lo}, {hi}) with {count} bins")));
        }
        let width = (hi - lo) / count as f64;
        let mut bins: Vec<Bin> = (0..count)
            .map(|i| Bin {
                left: lo + width * i as f64,
                right: if i + 1 == count { hi } else { lo + width * (i + 1) as f64 },
                count: 0,
            })
            .collect();
        let (mut underflow, mut overflow) = (0, 0);
        for &x in sorted {
            if x < lo {
                underflow += 1;
            } else if x >= hi {
                overflow += 1;
            } else {
                let i = (((x - lo) / width) as usize).min(count - 1);
                // floating-point edge: keep the bin consistent with its stored edges
                let i = if x < bins[i].left { i - 1 } else if x >= bins[i].right && i + 1 < count { i + 1 } else { i };
                bins[i].count += 1;
            }
        }
        Ok(Histogram { bins, underflow, overflow })
    }

    pub fn build(sorted: &[f64], binning: Binning) -> Result<Self, DistributionError> {
        if sorted.is_empty() {
            return Err(DistributionError::TooFewSamples { need: 1, got: 0 });
        }
        match binning {
            Binning::Range { lo, hi, count } => Self::with_range(sorted, lo, hi, count),
            Binning::Count(count) => {
                let (lo, hi) = central_range(sorted);
                Self::with_range(sorted, lo, hi, count)
            }
            Binning::FreedmanDiaconis => {
                let (lo, hi) = central_range(sorted);
                let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
                let width = 2.0 * iqr / (sorted.len() as f64).cbrt();
                let count = if width > 0.0 {
                    (((hi - lo) / width).ceil() as usize).clamp(1, MAX_AUTO_BINS)
                } else {
                    1
                };
                Self::with_range(sorted, lo, hi, count)
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum::<u64>() + self.underflow + self.overflow
    }

    /// `count / (n * width)` per bin, with `n` the full sample size.
    pub fn densities(&self) -> Vec<f64> {
        let n = self.total() as f64;
        self.bins
            .iter()
            .map(|b| b.count as f64 / (n * (b.right - b.left)))
            .collect()
    }

    /// CSV with header `bin_left,bin_right,count,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count,density\n");
        for (b, d) in self.bins.iter().zip(self.densities()) {
            out.push_str(&format!("{},{},{},{}\n", b.left, b.right, b.count, d));
        }
        out
    }
}

/// `[Q(0.0025), Q(0.9975)]`, widened to a unit interval around a constant sample.
fn central_range(sorted: &[f64]) -> (f64, f64) {
    let lo = quantile_sorted(sorted, CENTRAL_TAIL);
    let hi = quantile_sorted(sorted, 1.0 - CENTRAL_TAIL);
    if hi > lo {
        // nudge so the upper quantile itself is binned
        (lo, hi + (hi - lo) * 1e-12)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Where a sample came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub seed: u64,
    pub n: usize,
    pub horizon: u64,
    pub alpha_policy: String,
    pub x_policy: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    /// Samples sorted ascending; this is the ECDF support.
    pub samples: Vec<f64>,
    pub histogram: Histogram,
    pub meta: Provenance,
}

impl EmpiricalDist {
    pub fn new(samples: Vec<f64>, binning: Binning, meta: Provenance) -> Result<Self, DistributionError> {
        let sorted = sorted_finite(&samples)?;
        let histogram = Histogram::build(&sorted, binning)?;
        Ok(EmpiricalDist { samples: sorted, histogram, meta })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `#{x_i <= y} / n`
    pub fn ecdf(&self, y: f64) -> f64 {
        self.samples.partition_point(|&x| x <= y) as f64 / self.samples.len() as f64
    }

    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.samples, p)
    }

    pub fn ks_against<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        ks_distance_sorted(&self.samples, cdf)
    }

    pub fn fit_cauchy(&self) -> Result<CauchyFit, DistributionError> {
        if self.samples.len() < 100 {
            return Err(DistributionError::TooFewSamples { need: 100, got: self.samples.len() });
        }
        fit_cauchy_sorted(&self.samples)
    }

    pub fn moments(&self) -> Result<MomentSummary, DistributionError> {
        moment_summary(&self.samples)
    }

    /// `max_y |F_n(-y) + F_n(y) - 1|` over the given grid.
    pub fn symmetry_gap(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&y| {
                // F(-y) taken as left limit so that a symmetric sample gives 0
                let left = self.samples.partition_point(|&x| x < -y) as f64 / self.samples.len() as f64;
                (left + self.ecdf(y) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Cauchy, Distribution, StandardNormal, Uniform};

    fn cauchy_samples(scale: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Cauchy::new(0.0, scale).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn normal_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Composite Simpson after the substitution s = sinh(v), v in [-80, 80].
    fn integrate_pdf(q: f64, beta: f64) -> f64 {
        let n = 400_000;
        let (a, b) = (-80.0f64, 80.0f64);
        let h = (b - a) / n as f64;
        let f = |v: f64| q_gaussian_pdf(v.sinh(), q, beta).unwrap() * v.cosh();
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn mid_distance_discounts_atoms() {
        // two equal atoms at -1 and 1 against a CDF that jumps from 1/4 to 3/4 at 0
        let xs = [-1.0, -1.0, 1.0, 1.0];
        let cdf = |x: f64| if x < 0.0 { 0.25 } else { 0.75 };
        assert_eq!(ks_distance_sorted(&xs, cdf), 0.25);
        assert_eq!(ks_mid_distance_sorted(&xs, cdf), 0.0);
        let ys: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_mid_distance_sorted(&ys, |x| x) <= 1e-12);
    }

    #[test]
    fn cauchy_cdf_examples() {
        assert_eq!(cauchy_cdf(0.0, 3.0), 0.5);
        assert!((cauchy_cdf(1e300, 2.0) - 1.0).abs() < 1e-15);
        let rho = 4.0 * PI;
        assert!((cauchy_cdf(1.0 / rho, rho) - 0.75).abs() < 1e-15);
        assert!((cauchy_quantile(0.75, rho) - 1.0 / rho).abs() < 1e-15);
    }

    #[test]
    fn c2_is_pi_and_c1_is_sqrt_pi() {
        assert!((q_normalization(2.0).unwrap() - PI).abs() < 1e-12);
        assert!((q_normalization(1.0).unwrap() - PI.sqrt()).abs() < 1e-12);
        assert!(q_normalization(3.0).is_err());
        assert!(q_gaussian_pdf(0.0, 3.2, 1.0).is_err());
    }

    #[test]
    fn q_two_is_cauchy() {
        let rho = 4.0 * PI;
        assert!((q_gaussian_pdf(0.0, 2.0, rho * rho).unwrap() - 4.0).abs() < 1e-12);
        for i in 0..1000 {
            let s = -5.0 + 10.0 * i as f64 / 999.0;
            for rho in [0.3, 1.0, 4.0 * PI] {
                let a = q_gaussian_pdf(s, 2.0, rho * rho).unwrap();
                assert!((a - cauchy_pdf(s, rho)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_one_is_gaussian() {
        let v = q_gaussian_pdf(0.0, 1.0, 0.5).unwrap();
        assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        // continuity from above
        let near = q_gaussian_pdf(0.7, 1.0 + 1e-6, 0.5).unwrap();
        assert!((near - normal_pdf(0.7)).abs() < 1e-6);
        let below = q_gaussian_pdf(0.7, 1.0 - 1e-6, 0.5).unwrap();
        assert!((below - normal_pdf(0.7)).abs() < 1e-6);
    }

    #[test]
    fn q_gaussian_integrates_to_one() {
        for q in [1.2, 1.5, 2.0, 2.5] {
            let total = integrate_pdf(q, 1.3);
            assert!((total - 1.0).abs() < 1e-6, "q={q}: {total}");
        }
    }

    #[test]
    fn ks_examples() {
        let n = 50;
        let grid: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_distance(&grid, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
        assert_eq!(ks_distance(&[0.0], |y| cauchy_cdf(y, 1.0)).unwrap(), 0.5);
        assert!(ks_distance(&[], |y| y).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| u.sample(&mut rng)).collect();
        assert!(ks_distance(&xs, |x| x.clamp(0.0, 1.0)).unwrap() < 0.01);
    }

    #[test]
    fn ks_is_invariant_under_monotone_maps() {
        let xs = cauchy_samples(1.0, 5000, 9);
        let d1 = ks_distance(&xs, |y| cauchy_cdf(y, 1.0)).unwrap();
        let ys: Vec<f64> = xs.iter().map(|x| x.atan()).collect();
        let d2 = ks_distance(&ys, |u| cauchy_cdf(u.tan(), 1.0)).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn two_sample_ks_basic() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample_sorted(&a, &a), 0.0);
        assert_eq!(ks_two_sample_sorted(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn fit_cauchy_recovers_scale() {
        for (scale, seed) in [(1.0 / (4.0 * PI), 1u64), (1.0, 2)] {
            let xs = cauchy_samples(scale, 1_000_000, seed);
            let fit = fit_cauchy(&xs).unwrap();
            let rho = 1.0 / scale;
            assert!((fit.rho - rho).abs() / rho < 0.02, "{} vs {rho}", fit.rho);
            assert!(fit.ks_distance < 0.01);
        }
    }

    #[test]
    fn fit_cauchy_round_trip() {
        let xs = cauchy_samples(0.3, 1_000_000, 17);
        let first = fit_cauchy(&xs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let again: Vec<f64> = (0..1_000_000).map(|_| cauchy_quantile(u.sample(&mut rng), first.rho)).collect();
        let second = fit_cauchy(&again).unwrap();
        assert!((second.rho - first.rho).abs() / first.rho < 0.03);
    }

    #[test]
    fn fit_cauchy_errors() {
        assert_eq!(fit_cauchy(&[1.0; 500]), Err(DistributionError::DegenerateSample));
        assert!(matches!(fit_cauchy(&[1.0; 5]), Err(DistributionError::TooFewSamples { .. })));
        let mut xs = cauchy_samples(1.0, 200, 1);
        xs[3] = f64::NAN;
        assert_eq!(fit_cauchy(&xs), Err(DistributionError::NonFinite));
    }

    #[test]
    fn q_fit_on_cauchy_and_gaussian() {
        let rho = 4.0 * PI;
        let xs = cauchy_samples(1.0 / rho, 200_000, 3);
        let fit = fit_q_gaussian(&xs).unwrap();
        assert!((1.95..=2.05).contains(&fit.q), "q = {}", fit.q);
        assert!((fit.beta - rho * rho).abs() / (rho * rho) < 0.1, "beta = {}", fit.beta);
        assert!((fit.p0 - fit.beta.sqrt() / fit.c_q).abs() < 1e-12);

        let g = normal_samples(200_000, 4);
        let fit = fit_q_gaussian_with(&g, QGaussianFitOptions { q_min: 0.9 }).unwrap();
        assert!((0.97..=1.03).contains(&fit.q), "q = {}", fit.q);
        assert!(fit_q_gaussian(&g[..10]).is_err());
    }

    #[test]
    fn moment_examples() {
        let pm: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let m = moment_summary(&pm).unwrap();
        assert!(m.mean.abs() < 1e-15);
        assert!((m.variance - 1.0).abs() < 2e-3);
        assert!(m.skewness.abs() < 1e-12);
        assert!((m.excess_kurtosis + 2.0).abs() < 1e-12);

        let c = moment_summary(&[2.5; 10]).unwrap();
        assert_eq!(c.variance, 0.0);
        assert!(moment_summary(&[1.0, 2.0, 3.0]).is_err());

        let g = normal_samples(1_000_000, 8);
        let m = moment_summary(&g).unwrap();
        assert!(m.skewness.abs() < 0.01);
        assert!(m.excess_kurtosis.abs() < 0.02);
    }

    #[test]
    fn histogram_counts_everything() {
        let xs = cauchy_samples(1.0, 10_000, 6);
        let d = EmpiricalDist::new(xs, Binning::FreedmanDiaconis, Provenance::default()).unwrap();
        assert_eq!(d.histogram.total(), 10_000);
        for w in d.histogram.bins.windows(2) {
            assert_eq!(w[0].right, w[1].left);
            assert!(w[0].left < w[0].right);
        }
        let fixed = Histogram::build(&d.samples, Binning::Count(7)).unwrap();
        assert_eq!(fixed.bins.len(), 7);
        assert!(Histogram::build(&d.samples, Binning::Range { lo: 1.0, hi: 0.0, count: 3 }).is_err());
        let csv = fixed.to_csv();
        assert!(csv.starts_with("bin_left,bin_right,count,density\n"));
        assert_eq!(csv.lines().count(), 8);
    }

    #[test]
    fn ecdf_and_symmetry() {
        let d = EmpiricalDist::new(vec![-2.0, -1.0, 1.0, 2.0], Binning::Count(2), Provenance::default()).unwrap();
        assert_eq!(d.ecdf(0.0), 0.5);
        assert_eq!(d.ecdf(2.0), 1.0);
        assert_eq!(d.symmetry_gap(&[0.5, 1.0, 1.5, 2.0]), 0.0);
    }
}
