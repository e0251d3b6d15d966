//! Ergodic sums `S_t(x, alpha) = sum_{k<t} h({x + k alpha})` of a circle rotation.
//!
//! Orbits are iterated in 64-bit fixed point: `x <- x + alpha` is a wrapping
//! add, which is the additive recurrence with the conditional subtraction of 1
//! built in. Observable values are accumulated as exact integers in units of
//! 2^-64, so the only rounding in a sum is the final conversion to `f64`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arithmetic::UnitPoint;

const SIGN_BIT: u64 = 1 << 63;
const INV_TWO_POW_64: f64 = 1.0 / 18_446_744_073_709_551_616.0;
const LANES: usize = 8;
/// Per-lane iterations before the 32-bit halves could overflow a `u64` lane sum.
const MAX_BLOCKS_PER_PASS: u64 = 1 << 31;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("indicator length must lie strictly between 0 and 1")]
    BadGamma,
    #[error("stride must be at least 1")]
    BadStride,
}

/// Zero-mean observable on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// `h(x) = {x} - 1/2`
    Sawtooth,
    /// `h_2(x) = 1_[0, gamma)(x) - gamma`
    Indicator { gamma: UnitPoint },
}

impl Observable {
    pub fn indicator(gamma: UnitPoint) -> Result<Self, DynamicsError> {
        if gamma == UnitPoint::ZERO {
            return Err(DynamicsError::BadGamma);
        }
        Ok(Observable::Indicator { gamma })
    }

    /// Value at `x` in units of 2^-64.
    #[inline(always)]
    fn units(self, x: u64) -> i128 {
        match self {
            Observable::Sawtooth => ((x ^ SIGN_BIT) as i64) as i128,
            Observable::Indicator { gamma } => {
                let g = gamma.bits() as i128;
                if x < gamma.bits() {
                    (1i128 << 64) - g
                } else {
                    -g
                }
            }
        }
    }
}

pub fn evaluate(observable: Observable, x: UnitPoint) -> f64 {
    units_to_f64(observable.units(x.bits()))
}

/// `{x + alpha}`
pub fn rotate(x: UnitPoint, alpha: UnitPoint) -> UnitPoint {
    UnitPoint::from_bits(x.bits().wrapping_add(alpha.bits()))
}

#[inline]
pub(crate) fn units_to_f64(units: i128) -> f64 {
    units as f64 * INV_TWO_POW_64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitSpec {
    pub x0: UnitPoint,
    pub alpha: UnitPoint,
    pub horizon: u64,
    pub observable: Observable,
}

impl OrbitSpec {
    pub fn new(
        x0: UnitPoint,
        alpha: UnitPoint,
        horizon: u64,
        observable: Observable,
    ) -> Result<Self, DynamicsError> {
        if horizon < 1 {
            return Err(DynamicsError::EmptyHorizon);
        }
        Ok(OrbitSpec { x0, alpha, horizon, observable })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Storage {
    Full,
    /// Keep `S_t` for `t = m, 2m, ...`, plus the final value.
    Strided(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumSeries {
    pub spec: OrbitSpec,
    pub stride: u64,
    /// `(t, S_t)` pairs in increasing `t`.
    pub values: Vec<(u64, f64)>,
}

impl SumSeries {
    pub fn last(&self) -> f64 {
        self.values.last().map(|v| v.1).unwrap_or(0.0)
    }

    /// Stored values without their times.
    pub fn sums(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.1)
    }
}

/// `S_1..S_T`, subsampled according to `storage`.
pub fn ergodic_sum_series(spec: &OrbitSpec, storage: Storage) -> Result<SumSeries, DynamicsError> {
    let stride = match storage {
        Storage::Full => 1,
        Storage::Strided(0) => return Err(DynamicsError::BadStride),
        Storage::Strided(m) => m,
    };
    let mut values = Vec::with_capacity((spec.horizon / stride + 1) as usize);
    let mut x = spec.x0.bits();
    let step = spec.alpha.bits();
    let mut acc: i128 = 0;
    let mut until_store = stride;
    for t in 1..=spec.horizon {
        acc += spec.observable.units(x);
        x = x.wrapping_add(step);
        until_store -= 1;
        if until_store == 0 {
            values.push((t, units_to_f64(acc)));
            until_store = stride;
        }
    }
    if values.last().map(|v| v.0) != Some(spec.horizon) {
        values.push((spec.horizon, units_to_f64(acc)));
    }
    Ok(SumSeries { spec: *spec, stride, values })
}

/// Every `S_t` for `t = 0..horizon` (with `S_0 = 0`), as needed by temporal
/// statistics. Makes `horizon - 1` observable evaluations.
pub fn temporal_sums(x0: UnitPoint, alpha: UnitPoint, horizon: u64, observable: Observable) -> Vec<f64> {
    let mut out = Vec::with_capacity(horizon as usize);
    if horizon == 0 {
        return out;
    }
    let mut x = x0.bits();
    let mut acc: i128 = 0;
    out.push(0.0);
    for _ in 1..horizon {
        acc += observable.units(x);
        x = x.wrapping_add(alpha.bits());
        out.push(units_to_f64(acc));
    }
    out
}

/// Exact `S_T` in units of 2^-64 together with the number of observable evaluations made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawSum {
    pub units: i128,
    pub evaluations: u64,
}

impl RawSum {
    pub fn value(self) -> f64 {
        units_to_f64(self.units)
    }
}

/// `sum_{k<n} {x0 + k alpha}` in units of 2^-64, and the number of points visited.
pub fn position_sum(x0: UnitPoint, alpha: UnitPoint, n: u64) -> (u128, u64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2.
        return unsafe { position_sum_avx2(x0, alpha, n) };
    }
    position_sum_portable(x0, alpha, n)
}

/// `#{k < n : {x0 + k alpha} < gamma}` and the number of points visited.
pub fn indicator_count(x0: UnitPoint, alpha: UnitPoint, gamma: UnitPoint, n: u64) -> (u64, u64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("avx2") {
        // SAFETY: the CPU supports AVX2.
        return unsafe { indicator_count_avx2(x0, alpha, gamma, n) };
    }
    indicator_count_portable(x0, alpha, gamma, n)
}

// Integer results are exact, so every code path returns identical values.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn position_sum_avx2(x0: UnitPoint, alpha: UnitPoint, n: u64) -> (u128, u64) {
    position_sum_portable(x0, alpha, n)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn indicator_count_avx2(x0: UnitPoint, alpha: UnitPoint, gamma: UnitPoint, n: u64) -> (u64, u64) {
    indicator_count_portable(x0, alpha, gamma, n)
}

#[inline(always)]
fn position_sum_portable(x0: UnitPoint, alpha: UnitPoint, n: u64) -> (u128, u64) {
    let step = alpha.bits().wrapping_mul(LANES as u64);
    let mut xs = [0u64; LANES];
    for (j, x) in xs.iter_mut().enumerate() {
        *x = x0.bits().wrapping_add(alpha.bits().wrapping_mul(j as u64));
    }
    let mut total: u128 = 0;
    let mut visited = 0u64;
    let mut blocks = n / LANES as u64;
    while blocks > 0 {
        let pass = blocks.min(MAX_BLOCKS_PER_PASS);
        let mut hi = [0u64; LANES];
        let mut lo = [0u64; LANES];
        for _ in 0..pass {
            for j in 0..LANES {
                hi[j] += xs[j] >> 32;
                lo[j] += xs[j] & 0xffff_ffff;
                xs[j] = xs[j].wrapping_add(step);
            }
        }
        for j in 0..LANES {
            total += ((hi[j] as u128) << 32) + lo[j] as u128;
        }
        visited += pass * LANES as u64;
        blocks -= pass;
    }
    let mut x = xs[0];
    for _ in 0..n % LANES as u64 {
        total += x as u128;
        x = x.wrapping_add(alpha.bits());
        visited += 1;
    }
    (total, visited)
}

#[inline(always)]
fn indicator_count_portable(x0: UnitPoint, alpha: UnitPoint, gamma: UnitPoint, n: u64) -> (u64, u64) {
    let g = gamma.bits();
    let step = alpha.bits().wrapping_mul(LANES as u64);
    let mut xs = [0u64; LANES];
    for (j, x) in xs.iter_mut().enumerate() {
        *x = x0.bits().wrapping_add(alpha.bits().wrapping_mul(j as u64));
    }
    let blocks = n / LANES as u64;
    let mut counts = [0u64; LANES];
    for _ in 0..blocks {
        for j in 0..LANES {
            counts[j] += (xs[j] < g) as u64;
            xs[j] = xs[j].wrapping_add(step);
        }
    }
    let mut count: u64 = counts.iter().sum();
    let mut x = xs[0];
    for _ in 0..n % LANES as u64 {
        count += (x < g) as u64;
        x = x.wrapping_add(alpha.bits());
    }
    (count, n)
}

/// Exact `S_T` with evaluation count; backs [`ergodic_sum_final`].
pub fn ergodic_sum_raw(spec: &OrbitSpec) -> RawSum {
    let n = spec.horizon;
    match spec.observable {
        Observable::Sawtooth => {
            let (sum, evaluations) = position_sum(spec.x0, spec.alpha, n);
            RawSum {
                units: sum as i128 - ((n as i128) << 63),
                evaluations,
            }
        }
        Observable::Indicator { gamma } => {
            let (count, evaluations) = indicator_count(spec.x0, spec.alpha, gamma, n);
            RawSum {
                units: ((count as i128) << 64) - n as i128 * gamma.bits() as i128,
                evaluations,
            }
        }
    }
}

/// `S_T` alone in constant memory; identical to the last value of [`ergodic_sum_series`].
pub fn ergodic_sum_final(spec: &OrbitSpec) -> f64 {
    ergodic_sum_raw(spec).value()
}
