//! Exact rational values: parsing, rendering, and common-denominator scaling.

use std::ops::AddAssign;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("`{input}` is not a rational number (expected `p/q` or a finite decimal)")]
pub struct ParseRationalError {
    pub input: String,
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `p/q`, an integer, or a finite decimal such as `-2.75` exactly.
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError { input: input.to_string() };
    let s = input.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_integer(p.trim()).ok_or_else(err)?;
        let q = parse_integer(q.trim()).ok_or_else(err)?;
        if q.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(p, q));
    }
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits_ok = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
    if (whole.is_empty() && frac.is_empty()) || !digits_ok(whole) || !digits_ok(frac) {
        return Err(err());
    }
    let mut numer: BigInt = format!("0{whole}{frac}").parse().map_err(|_| err())?;
    if negative {
        numer = -numer;
    }
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(numer, denom))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Exact string form: `p/q` in lowest terms, or `p` for integers.
pub fn to_exact_string(value: &Rational) -> String {
    value.to_string()
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Decimal rendering: exact when the value has a finite decimal expansion,
/// otherwise the shortest decimal that round-trips through `f64`.
pub fn to_decimal_string(value: &Rational) -> String {
    match finite_decimal(value) {
        Some(s) => s,
        None => format!("{}", to_f64(value)),
    }
}

fn finite_decimal(value: &Rational) -> Option<String> {
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut rest = value.denom().clone();
    let mut places = [0usize; 2];
    for (k, p) in [&two, &five].into_iter().enumerate() {
        while rest.is_multiple_of(p) {
            rest /= p;
            places[k] += 1;
        }
    }
    if !rest.is_one() {
        return None;
    }
    let places = places[0].max(places[1]);
    let scaled = (value * Rational::from_integer(BigInt::from(10).pow(places as u32))).to_integer();
    let digits = scaled.abs().to_string();
    let sign = if scaled.is_negative() { "-" } else { "" };
    if places == 0 {
        return Some(format!("{sign}{digits}"));
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (whole, frac) = padded.split_at(padded.len() - places);
    Some(format!("{sign}{whole}.{frac}"))
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Integer accumulator used by the exact evaluation kernels.
pub(crate) trait Accumulator: Clone + Zero + for<'a> AddAssign<&'a Self> {
    fn diff(a: &Self, b: &Self) -> Self;
    fn to_bigint(&self) -> BigInt;
}

impl Accumulator for i128 {
    fn diff(a: &Self, b: &Self) -> Self {
        a - b
    }

    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Accumulator for BigInt {
    fn diff(a: &Self, b: &Self) -> Self {
        a - b
    }

    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// Game values brought to a common denominator so kernels can run on integers.
#[derive(Debug, Clone)]
pub(crate) struct Scaled {
    pub denom: BigInt,
    pub ints: ScaledInts,
}

#[derive(Debug, Clone)]
pub(crate) enum ScaledInts {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

/// Magnitude bound for the `i128` path: sums of up to 2^32 differences stay in range.
const SMALL_BITS: u64 = 90;

impl Scaled {
    pub fn new(values: &[Rational]) -> Scaled {
        let denom = values.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
        let big: Vec<BigInt> = values
            .iter()
            .map(|v| v.numer() * (&denom / v.denom()))
            .collect();
        let small = big.iter().all(|b| b.bits() <= SMALL_BITS);
        let ints = if small {
            ScaledInts::Small(big.iter().map(|b| b.to_i128().expect("bounded")).collect())
        } else {
            ScaledInts::Big(big)
        };
        Scaled { denom, ints }
    }

    #[cfg(test)]
    pub fn is_small(&self) -> bool {
        matches!(self.ints, ScaledInts::Small(_))
    }
}
