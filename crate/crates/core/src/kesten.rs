//! Kesten's scale constant `rho = 2 pi ln 2 / (tau I)`.
//!
//! `I` is the integral over the unit square of `|sum_k k^-2 sin 2 pi k x sin 2 pi k y|`.
//! The series sums to `(pi^2 / 2) (B2({x - y}) - B2({x + y}))` with `B2` the second
//! Bernoulli polynomial, which on the triangle `0 <= y <= min(x, 1 - x)` is
//! `pi^2 y (1 - 2x)`. The integrand is invariant under the eight symmetries of the
//! square, and the eighth `0 <= y <= x <= 1/2` contributes `pi^2 / 192`, so
//! `I = pi^2 / 24`.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::LevyEstimate;

#[derive(Debug, Error, PartialEq)]
pub enum KestenError {
    #[error("point ({x}, {y}) lies outside the triangle 0 <= y <= min(x, 1 - x)")]
    OutsideTriangle { x: f64, y: f64 },
    #[error("truncation order K must be at least 1")]
    BadOrder,
    #[error("panel count must be even and positive, got {0}")]
    BadPanels(usize),
    #[error("tau and I must be positive, got tau = {tau}, I = {i}")]
    NonPositive { tau: f64, i: f64 },
}

/// The analytic Lévy exponent `tau = 12 ln 2 / pi^2`.
pub fn tau_analytic() -> f64 {
    12.0 * LN_2 / (PI * PI)
}

/// Partial sum `sum_{k=1}^K k^-2 sin(2 pi k x) sin(2 pi k y)`.
///
/// The sines come from an angle-addition recurrence, whose error grows like `k * eps`.
pub fn integrand_series(x: f64, y: f64, k_max: u64) -> Result<f64, KestenError> {
    if k_max < 1 {
        return Err(KestenError::BadOrder);
    }
    Ok(series_unchecked(x, y, k_max))
}

fn series_unchecked(x: f64, y: f64, k_max: u64) -> f64 {
    let (s1x, c1x) = (2.0 * PI * x).sin_cos();
    let (s1y, c1y) = (2.0 * PI * y).sin_cos();
    let (mut sx, mut cx, mut sy, mut cy) = (s1x, c1x, s1y, c1y);
    let mut acc = 0.0;
    for k in 1..=k_max {
        let kf = k as f64;
        acc += sx * sy / (kf * kf);
        (sx, cx) = (sx * c1x + cx * s1x, cx * c1x - sx * s1x);
        (sy, cy) = (sy * c1y + cy * s1y, cy * c1y - sy * s1y);
    }
    acc
}

/// Upper bound on `sum_{k > K} k^-2`.
pub fn truncation_bound(k_max: u64) -> f64 {
    1.0 / k_max as f64
}

/// `pi^2 y (1 - 2x)`, the limit of the series on the triangle with vertices
/// `(0, 0)`, `(1, 0)`, `(1/2, 1/2)`, boundary included.
pub fn closed_form_on_triangle(x: f64, y: f64) -> Result<f64, KestenError> {
    if !(x.is_finite() && y.is_finite() && y >= 0.0 && y <= x.min(1.0 - x)) {
        return Err(KestenError::OutsideTriangle { x, y });
    }
    Ok(PI * PI * y * (1.0 - 2.0 * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum IMethod {
    ClosedFormTriangle,
    /// Series truncated at `k_max`, Gauss–Legendre on a `panels x panels` grid.
    TruncatedSeriesQuadrature { k_max: u64, panels: usize },
}

impl IMethod {
    pub const DEFAULT_K: u64 = 10_000;
    pub const DEFAULT_PANELS: usize = 256;

    pub fn quadrature_default() -> Self {
        IMethod::TruncatedSeriesQuadrature { k_max: Self::DEFAULT_K, panels: Self::DEFAULT_PANELS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IValue {
    pub value: f64,
    pub method: IMethod,
    pub error_bound: f64,
}

/// `8 * integral_0^{1/2} dx integral_0^x pi^2 y (1 - 2x) dy`.
pub fn i_closed_form() -> f64 {
    PI * PI / 24.0
}

// 3-point Gauss–Legendre on [0, 1]
const GL_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
const GL_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Sum in a fixed binary tree, independent of thread count.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Integral of `|series_K|` over the unit square.
///
/// Cells of the grid lie inside one of the eight symmetry triangles except those
/// cut by a diagonal, which are split along it. Square cells use a tensor
/// 3-point rule, half cells a collapsed 3x3 rule; both integrate the
/// piecewise quadratic limit exactly, so the error is at most `sum_{k>K} k^-2`
/// plus rounding.
fn i_quadrature(k_max: u64, panels: usize) -> f64 {
    let n = panels;
    let h = 1.0 / n as f64;
    let nodes: Vec<f64> = (0..n)
        .flat_map(|c| GL_NODES.iter().map(move |t| (c as f64 + t) * h))
        .collect();
    let m = nodes.len();
    let base: Vec<(f64, f64)> = nodes.iter().map(|x| (2.0 * PI * x).sin_cos()).collect();

    // F[i][j] = series(nodes[i], nodes[j]) for all tensor nodes, in row blocks
    const BLOCK: usize = 48;
    let blocks: Vec<Vec<f64>> = (0..m.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows = (b * BLOCK)..((b + 1) * BLOCK).min(m);
            let mut f = vec![0.0; rows.len() * m];
            let mut s: Vec<f64> = base.iter().map(|p| p.0).collect();
            let mut c: Vec<f64> = base.iter().map(|p| p.1).collect();
            for k in 1..=k_max {
                let w = 1.0 / (k as f64 * k as f64);
                for (r, i) in rows.clone().enumerate() {
                    let wi = w * s[i];
                    let row = &mut f[r * m..(r + 1) * m];
                    for (fj, sj) in row.iter_mut().zip(&s) {
                        *fj += wi * sj;
                    }
                }
                for ((sj, cj), (s1, c1)) in s.iter_mut().zip(c.iter_mut()).zip(&base) {
                    (*sj, *cj) = (*sj * c1 + *cj * s1, *cj * c1 - *sj * s1);
                }
            }
            f
        })
        .collect();
    let f = blocks.concat();

    let on_diagonal = |cx: usize, cy: usize| cx == cy || cx + cy == n - 1;
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|cx| (0..n).map(move |cy| (cx, cy))).collect();
    let contributions: Vec<f64> = cells
        .par_iter()
        .map(|&(cx, cy)| {
            if on_diagonal(cx, cy) {
                return diagonal_cell(cx, cy, h, k_max, cx == cy);
            }
            let mut acc = 0.0;
            for (a, wa) in GL_WEIGHTS.iter().enumerate() {
                for (b, wb) in GL_WEIGHTS.iter().enumerate() {
                    acc += wa * wb * f[(3 * cx + a) * m + 3 * cy + b].abs();
                }
            }
            acc * h * h
        })
        .collect();
    pairwise_sum(&contributions)
}

/// Split a cell along its diagonal and integrate each half with a collapsed rule.
fn diagonal_cell(cx: usize, cy: usize, h: f64, k_max: u64, main: bool) -> f64 {
    let (x0, y0) = (cx as f64 * h, cy as f64 * h);
    let (x1, y1) = (x0 + h, y0 + h);
    let halves = if main {
        // y = x splits off the corners (x1, y0) and (x0, y1)
        [[(x0, y0), (x1, y0), (x1, y1)], [(x0, y0), (x0, y1), (x1, y1)]]
    } else {
        // y = 1 - x splits off the corners (x0, y0) and (x1, y1)
        [[(x0, y1), (x0, y0), (x1, y0)], [(x0, y1), (x1, y1), (x1, y0)]]
    };
    halves.iter().map(|t| triangle_rule(t, k_max)).sum()
}

/// Collapsed Gauss rule: `(u, v) -> P0 + u (P1 - P0) + u v (P2 - P1)`, Jacobian `u |det|`.
fn triangle_rule(t: &[(f64, f64); 3], k_max: u64) -> f64 {
    let [p0, p1, p2] = *t;
    let (ax, ay) = (p1.0 - p0.0, p1.1 - p0.1);
    let (bx, by) = (p2.0 - p1.0, p2.1 - p1.1);
    let det = (ax * by - ay * bx).abs();
    let mut acc = 0.0;
    for (i, u) in GL_NODES.iter().enumerate() {
        for (j, v) in GL_NODES.iter().enumerate() {
            let x = p0.0 + u * ax + u * v * bx;
            let y = p0.1 + u * ay + u * v * by;
            acc += GL_WEIGHTS[i] * GL_WEIGHTS[j] * u * series_unchecked(x, y, k_max).abs();
        }
    }
    acc * det
}

pub fn compute_i(method: IMethod) -> Result<IValue, KestenError> {
    match method {
        IMethod::ClosedFormTriangle => Ok(IValue { value: i_closed_form(), method, error_bound: 0.0 }),
        IMethod::TruncatedSeriesQuadrature { k_max, panels } => {
            if k_max < 1 {
                return Err(KestenError::BadOrder);
            }
            if panels == 0 || panels % 2 == 1 {
                return Err(KestenError::BadPanels(panels));
            }
            let value = i_quadrature(k_max, panels);
            // rounding: about k_max * eps per node value
            let rounding = 4.0 * k_max as f64 * f64::EPSILON;
            Ok(IValue { value, method, error_bound: truncation_bound(k_max) + rounding })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TauSource {
    Analytic,
    Estimated(LevyEstimate),
}

impl TauSource {
    pub fn value(&self) -> f64 {
        match self {
            TauSource::Analytic => tau_analytic(),
            TauSource::Estimated(e) => e.tau_hat,
        }
    }

    /// Standard error of the estimate, zero for the analytic value.
    pub fn std_error(&self) -> f64 {
        match self {
            TauSource::Analytic => 0.0,
            TauSource::Estimated(e) => e.std_error.unwrap_or(f64::INFINITY),
        }
    }
}

pub fn rho_from(tau: f64, i: f64) -> Result<f64, KestenError> {
    if !(tau > 0.0 && i > 0.0) {
        return Err(KestenError::NonPositive { tau, i });
    }
    Ok(2.0 * PI * LN_2 / (tau * i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KestenComputation {
    pub i_value: f64,
    pub i_method: IMethod,
    pub tau: f64,
    pub tau_source: TauSource,
    pub rho: f64,
    /// First-order propagation of the `I` bound and the `tau` standard error.
    pub error_bound: f64,
}

pub fn compute_rho(tau_source: TauSource, i: IValue) -> Result<KestenComputation, KestenError> {
    let tau = tau_source.value();
    let rho = rho_from(tau, i.value)?;
    let error_bound = rho * (i.error_bound / i.value + tau_source.std_error() / tau);
    Ok(KestenComputation {
        i_value: i.value,
        i_method: i.method,
        tau,
        tau_source,
        rho,
        error_bound,
    })
}
