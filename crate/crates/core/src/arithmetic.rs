//! Continued fractions of points on the unit circle.
//!
//! Two representations of a number in `[0, 1)` live here:
//!
//! * [`UnitPoint`] is a 64-bit fixed-point fraction of a turn. It is what the
//!   dynamics run on: rotation by `alpha` is a wrapping `u64` add and is exact.
//! * [`PreciseUnit`] is a rational enclosure `[lo, hi]` with a shared
//!   denominator. Continued fractions are expanded from it with exact integer
//!   arithmetic, and a coefficient is only reported once both ends of the
//!   enclosure agree on it.
//!
//! The named constants ship as 100-digit decimal literals. Note that
//! `pi - 3 = [7, 15, 1, 292, 1, 1, 1, 2, ...]`; the convergent denominator after
//! the `292` is `33102 = 292 * 113 + 106`, the burst period seen in the sawtooth
//! sums for that rotation. It is sometimes misprinted as `293`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::seeding::sample_rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// Number of random bits drawn per sample by [`estimate_levy_constant`].
const LEVY_SAMPLE_BITS: u64 = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithmeticError {
    #[error("expansion terminated after {} coefficients (rational input)", partial.depth())]
    RationalTermination { partial: CFExpansion },
    #[error("precision exhausted after {} coefficients", partial.depth())]
    PrecisionExhausted { partial: CFExpansion },
    #[error("depth must be at least {min}, got {got}")]
    DepthTooSmall { min: usize, got: usize },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("value {0} is outside [0, 1)")]
    OutOfRange(String),
    #[error("cannot parse {0:?} as a point of [0, 1)")]
    Parse(String),
}

impl ArithmeticError {
    /// The coefficients computed before the expansion stopped, if any.
    pub fn into_partial(self) -> Option<CFExpansion> {
        match self {
            ArithmeticError::RationalTermination { partial }
            | ArithmeticError::PrecisionExhausted { partial } => Some(partial),
            _ => None,
        }
    }
}

/// A point of the circle `R/Z` as a fraction of a turn with 2^-64 resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitPoint(u64);

impl UnitPoint {
    pub const ZERO: UnitPoint = UnitPoint(0);
    pub const HALF: UnitPoint = UnitPoint(1 << 63);

    pub const fn from_bits(bits: u64) -> Self {
        UnitPoint(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn from_f64(x: f64) -> Result<Self, ArithmeticError> {
        if !(0.0..1.0).contains(&x) {
            return Err(ArithmeticError::OutOfRange(x.to_string()));
        }
        // Exact: every f64 in [0, 1) is a multiple of 2^-1074 and x * 2^64 < 2^64.
        Ok(UnitPoint((x * TWO_POW_64) as u64))
    }

    /// `num / den` rounded to the nearest representable point.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self, ArithmeticError> {
        if den == 0 || num >= den {
            return Err(ArithmeticError::OutOfRange(format!("{num}/{den}")));
        }
        let scaled = ((num as u128) << 64) + (den as u128) / 2;
        let v = scaled / den as u128;
        Ok(UnitPoint(v.min(u64::MAX as u128) as u64))
    }

    /// Nearest `f64`, always strictly below 1.
    pub fn value(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl From<UnitPoint> for f64 {
    fn from(p: UnitPoint) -> f64 {
        p.value()
    }
}

impl TryFrom<f64> for UnitPoint {
    type Error = ArithmeticError;
    fn try_from(x: f64) -> Result<Self, Self::Error> {
        UnitPoint::from_f64(x)
    }
}

impl fmt::Display for UnitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A number in `[0, 1)` known to lie in `[lo/den, hi/den]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreciseUnit {
    lo: BigUint,
    hi: BigUint,
    den: BigUint,
}

impl PreciseUnit {
    pub fn exact(num: BigUint, den: BigUint) -> Result<Self, ArithmeticError> {
        Self::enclosure(num.clone(), num, den)
    }

    pub fn enclosure(lo: BigUint, hi: BigUint, den: BigUint) -> Result<Self, ArithmeticError> {
        if den.is_zero() || lo > hi || lo >= den {
            return Err(ArithmeticError::OutOfRange(format!("[{lo}, {hi}]/{den}")));
        }
        // hi may touch 1 when lo is the last representable value below it
        let hi = if hi > den { den.clone() } else { hi };
        Ok(PreciseUnit { lo, hi, den })
    }

    /// Parses a plain decimal `0.ddd…`; the literal is taken as exact.
    pub fn parse_decimal(s: &str) -> Result<Self, ArithmeticError> {
        let (num, den) = parse_decimal_parts(s)?;
        Self::exact(num, den)
    }

    /// Parses a decimal literal that is a truncation of some longer expansion,
    /// so the true value lies within one unit of the last digit above it.
    pub fn parse_truncated(s: &str) -> Result<Self, ArithmeticError> {
        let (num, den) = parse_decimal_parts(s)?;
        let hi = &num + 1u32;
        Self::enclosure(num, hi, den)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// Width of the enclosure as a fraction of the unit interval.
    pub fn width(&self) -> f64 {
        ratio_to_f64(&(&self.hi - &self.lo), &self.den)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.lo, &self.den)
    }

    /// Nearest fixed-point circle coordinate to the lower end of the enclosure.
    pub fn to_point(&self) -> UnitPoint {
        let scaled: BigUint = (&self.lo << 64usize) + (&self.den >> 1usize);
        let v = scaled / &self.den;
        UnitPoint(v.to_u64().unwrap_or(0))
    }

    /// Orders `p/q` against the enclosure: `Less` if `p/q < lo`, `Greater` if `p/q > hi`.
    pub fn compare_ratio(&self, p: &BigUint, q: &BigUint) -> Ordering {
        let lhs = p * &self.den;
        if lhs < &self.lo * q {
            Ordering::Less
        } else if lhs > &self.hi * q {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }

    /// Upper bound on `|x - p/q|` over the enclosure, as an f64.
    pub fn distance_bound(&self, p: &BigUint, q: &BigUint) -> f64 {
        let pd = p * &self.den;
        let lo_q = &self.lo * q;
        let hi_q = &self.hi * q;
        let a = if pd > lo_q { &pd - &lo_q } else { &lo_q - &pd };
        let b = if pd > hi_q { &pd - &hi_q } else { &hi_q - &pd };
        let worst = a.max(b);
        ratio_to_f64(&worst, &(&self.den * q))
    }

    /// Exact test of `|x - p/q| < 1/(q * q_next)` for every x in the enclosure.
    pub fn within_convergent_bound(&self, p: &BigUint, q: &BigUint, q_next: &BigUint) -> bool {
        // |x - p/q| < 1/(q q') <=> |x q q' den - p q' den| < den
        let pd = p * q_next * &self.den;
        let qq = q * q_next;
        let den = &self.den;
        [&self.lo, &self.hi].iter().all(|end| {
            let xd = *end * &qq;
            let diff = if xd > pd { &xd - &pd } else { &pd - &xd };
            &diff < den
        })
    }
}

impl From<UnitPoint> for PreciseUnit {
    fn from(p: UnitPoint) -> Self {
        PreciseUnit {
            lo: BigUint::from(p.0),
            hi: BigUint::from(p.0),
            den: BigUint::one() << 64usize,
        }
    }
}

impl FromStr for PreciseUnit {
    type Err = ArithmeticError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PreciseUnit::parse_decimal(s)
    }
}

fn parse_decimal_parts(s: &str) -> Result<(BigUint, BigUint), ArithmeticError> {
    let err = || ArithmeticError::Parse(s.to_string());
    let t = s.trim();
    let frac = t
        .strip_prefix("0.")
        .or_else(|| t.strip_prefix('.'))
        .or(if t == "0" { Some("") } else { None })
        .ok_or_else(err)?;
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let den = num_traits::pow(BigUint::from(10u32), frac.len());
    let num = if frac.is_empty() {
        BigUint::zero()
    } else {
        BigUint::parse_bytes(frac.as_bytes(), 10).ok_or_else(err)?
    };
    Ok((num, den))
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // Shift both to ~64 significant bits before dividing.
    let shift = num.bits().max(den.bits()).saturating_sub(64) as usize;
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    if d == 0.0 {
        // den much smaller than num, cannot happen for values in [0, 1]
        return f64::INFINITY;
    }
    n / d
}

/// Built-in irrational rotation numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constant {
    /// `(sqrt 5 - 1) / 2 = [1, 1, 1, ...]`
    #[serde(rename = "golden")]
    Golden,
    /// `e - 2 = [1, 2, 1, 1, 4, 1, 1, 6, ...]`
    #[serde(rename = "e-2")]
    EMinusTwo,
    /// `pi - 3 = [7, 15, 1, 292, ...]`
    #[serde(rename = "pi-3")]
    PiMinusThree,
    /// `sqrt 2 - 1 = [2, 2, 2, ...]`
    #[serde(rename = "sqrt2-1")]
    SqrtTwoMinusOne,
}

impl Constant {
    pub const ALL: [Constant; 4] = [
        Constant::Golden,
        Constant::EMinusTwo,
        Constant::PiMinusThree,
        Constant::SqrtTwoMinusOne,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constant::Golden => "golden",
            Constant::EMinusTwo => "e-2",
            Constant::PiMinusThree => "pi-3",
            Constant::SqrtTwoMinusOne => "sqrt2-1",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Constant::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Decimal expansion truncated after 100 digits.
    pub fn digits(self) -> &'static str {
        match self {
            Constant::Golden => "0.6180339887498948482045868343656381177203091798057628621354486227052604628189024497072072041893911374",
            Constant::EMinusTwo => "0.7182818284590452353602874713526624977572470936999595749669676277240766303535475945713821785251664274",
            Constant::PiMinusThree => "0.1415926535897932384626433832795028841971693993751058209749445923078164062862089986280348253421170679",
            Constant::SqrtTwoMinusOne => "0.4142135623730950488016887242096980785696718753769480731766797379907324784621070388503875343276415727",
        }
    }

    pub fn precise(self) -> PreciseUnit {
        PreciseUnit::parse_truncated(self.digits()).expect("built-in literal is well formed")
    }

    pub fn point(self) -> UnitPoint {
        self.precise().to_point()
    }
}

/// Either a named built-in or a plain decimal literal such as `0.5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointSpec {
    Named(Constant),
    Decimal(String),
}

impl PointSpec {
    pub fn precise(&self) -> PreciseUnit {
        match self {
            PointSpec::Named(c) => c.precise(),
            PointSpec::Decimal(s) => PreciseUnit::parse_decimal(s).expect("validated on parse"),
        }
    }

    pub fn point(&self) -> UnitPoint {
        match self {
            PointSpec::Named(c) => c.point(),
            PointSpec::Decimal(_) => self.precise().to_point(),
        }
    }
}

impl FromStr for PointSpec {
    type Err = ArithmeticError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(c) = Constant::from_name(s.trim()) {
            return Ok(PointSpec::Named(c));
        }
        PreciseUnit::parse_decimal(s)?;
        Ok(PointSpec::Decimal(s.trim().to_string()))
    }
}

impl fmt::Display for PointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSpec::Named(c) => f.write_str(c.name()),
            PointSpec::Decimal(s) => f.write_str(s),
        }
    }
}

/// Coefficients `a_1..a_n` of `x = [0; a_1, a_2, ...]` and the convergents
/// `p_k / q_k`, stored from `k = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFExpansion {
    pub coefficients: Vec<BigUint>,
    pub convergents: Vec<(BigUint, BigUint)>,
}

impl CFExpansion {
    fn from_coefficients(coefficients: Vec<BigUint>) -> Self {
        let mut convergents = Vec::with_capacity(coefficients.len());
        // (p_{-1}, q_{-1}) = (1, 0), (p_0, q_0) = (0, 1)
        let (mut p2, mut q2) = (BigUint::one(), BigUint::zero());
        let (mut p1, mut q1) = (BigUint::zero(), BigUint::one());
        for a in &coefficients {
            let p = a * &p1 + &p2;
            let q = a * &q1 + &q2;
            p2 = std::mem::replace(&mut p1, p.clone());
            q2 = std::mem::replace(&mut q1, q.clone());
            convergents.push((p, q));
        }
        CFExpansion { coefficients, convergents }
    }

    pub fn depth(&self) -> usize {
        self.coefficients.len()
    }

    pub fn denominators(&self) -> impl Iterator<Item = &BigUint> {
        self.convergents.iter().map(|(_, q)| q)
    }

    /// Coefficients as machine integers; `None` if any exceeds `u64`.
    pub fn coefficients_u64(&self) -> Option<Vec<u64>> {
        self.coefficients.iter().map(|a| a.to_u64()).collect()
    }

    pub fn max_coefficient(&self) -> Option<&BigUint> {
        self.coefficients.iter().max()
    }
}

impl fmt::Display for CFExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, a) in self.coefficients.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// One Gauss-map step on `num/den`: returns `floor(den/num)` and the new remainder.
fn gauss_step(num: &BigUint, den: &BigUint) -> (BigUint, BigUint, BigUint) {
    let (a, r) = den.div_rem(num);
    (a, r, num.clone())
}

/// Expands `x` to `depth` coefficients with the Gauss map `a = floor(1/r)`, `r <- frac(1/r)`.
///
/// Both ends of the enclosure are expanded in lockstep with exact integer
/// arithmetic; a coefficient is accepted only if they agree on it.
pub fn continued_fraction(x: &PreciseUnit, depth: usize) -> Result<CFExpansion, ArithmeticError> {
    if depth < 1 {
        return Err(ArithmeticError::DepthTooSmall { min: 1, got: depth });
    }
    let (mut lo_num, mut lo_den) = (x.lo.clone(), x.den.clone());
    let (mut hi_num, mut hi_den) = (x.hi.clone(), x.den.clone());
    let exact = x.is_exact();
    let mut coefficients = Vec::with_capacity(depth);

    while coefficients.len() < depth {
        if exact {
            if lo_num.is_zero() {
                return Err(ArithmeticError::RationalTermination {
                    partial: CFExpansion::from_coefficients(coefficients),
                });
            }
            let (a, r, d) = gauss_step(&lo_num, &lo_den);
            coefficients.push(a);
            lo_num = r;
            lo_den = d;
            continue;
        }
        // An endpoint at zero (or one) sits on a cylinder boundary: nothing more is decidable.
        if lo_num.is_zero() || hi_num.is_zero() || hi_num >= hi_den {
            return Err(ArithmeticError::PrecisionExhausted {
                partial: CFExpansion::from_coefficients(coefficients),
            });
        }
        let (a_lo, r_lo, d_lo) = gauss_step(&lo_num, &lo_den);
        let (a_hi, r_hi, d_hi) = gauss_step(&hi_num, &hi_den);
        if a_lo != a_hi {
            return Err(ArithmeticError::PrecisionExhausted {
                partial: CFExpansion::from_coefficients(coefficients),
            });
        }
        coefficients.push(a_lo);
        // 1/r is decreasing, so the endpoints swap roles after each step.
        lo_num = r_hi;
        lo_den = d_hi;
        hi_num = r_lo;
        hi_den = d_lo;
    }
    Ok(CFExpansion::from_coefficients(coefficients))
}

/// Finite-depth surrogate for "bounded partial quotients": true iff every
/// computed coefficient is at most `bound`.
pub fn is_badly_approximable(cf: &CFExpansion, bound: u64) -> bool {
    let bound = BigUint::from(bound);
    cf.coefficients.iter().all(|a| *a <= bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyEstimate {
    /// Mean of `depth / ln q_depth` over the samples.
    pub tau_hat: f64,
    /// `depth / mean(ln q_depth)`, the pooled alternative.
    pub tau_pooled: f64,
    pub sample_count: usize,
    pub depth: usize,
    /// Standard error of the mean; absent for a single sample.
    pub std_error: Option<f64>,
    /// Draws discarded because the expansion stopped early.
    pub redraws: usize,
}

/// `depth / ln q_depth` for a single point.
pub fn levy_ratio(x: &PreciseUnit, depth: usize) -> Result<f64, ArithmeticError> {
    let cf = continued_fraction(x, depth)?;
    let q = &cf.convergents[depth - 1].1;
    Ok(depth as f64 / ln_biguint(q))
}

pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    (n >> shift as usize).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

fn random_precise_unit(rng: &mut ChaCha8Rng) -> PreciseUnit {
    let mut bytes = [0u8; (LEVY_SAMPLE_BITS / 8) as usize];
    rng.fill_bytes(&mut bytes);
    let lo = BigUint::from_bytes_le(&bytes);
    let hi = &lo + 1u32;
    PreciseUnit::enclosure(lo, hi, BigUint::one() << LEVY_SAMPLE_BITS as usize)
        .expect("random numerator is below the denominator")
}

/// Monte Carlo estimate of the Khinchin–Lévy constant `lim n / ln q_n` over uniform x.
///
/// Each sample draws a 256-bit random enclosure; draws whose expansion stops
/// before `depth` are discarded and redrawn from the same stream.
pub fn estimate_levy_constant(
    n_samples: usize,
    depth: usize,
    rng_seed: u64,
) -> Result<LevyEstimate, ArithmeticError> {
    if n_samples == 0 {
        return Err(ArithmeticError::NoSamples);
    }
    if depth < 5 {
        return Err(ArithmeticError::DepthTooSmall { min: 5, got: depth });
    }
    let draws: Vec<(f64, usize)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(rng_seed, i);
            let mut redraws = 0;
            loop {
                let x = random_precise_unit(&mut rng);
                match levy_ratio(&x, depth) {
                    Ok(r) => return (r, redraws),
                    Err(_) => redraws += 1,
                }
            }
        })
        .collect();

    let n = draws.len() as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let std_error = (draws.len() > 1).then(|| {
        let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });
    let mean_ln_q = draws.iter().map(|d| depth as f64 / d.0).sum::<f64>() / n;
    Ok(LevyEstimate {
        tau_hat: mean,
        tau_pooled: depth as f64 / mean_ln_q,
        sample_count: draws.len(),
        depth,
        std_error,
        redraws: draws.iter().map(|d| d.1).sum(),
    })
}
