//! Scalars that are either exact rationals or floats carrying an absolute
//! error bound.
//!
//! Arithmetic between two exact values stays exact. Any operation touching
//! an approximate value produces an approximate value whose bound is
//! propagated affinely (first order plus a rounding term).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Relative rounding unit used when widening float bounds.
const ULP: f64 = f64::EPSILON;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx { value: f64, err: f64 },
}

impl Value {
    pub fn zero() -> Self {
        Value::Exact(BigRational::zero())
    }

    pub fn one() -> Self {
        Value::Exact(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Value::Exact(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Value::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn approx(value: f64, err: f64) -> Self {
        Value::Approx { value, err: err.abs() }
    }

    /// `2^-n` style powers of a rational base.
    pub fn pow_ratio(num: i64, den: i64, exp: i32) -> Self {
        Value::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)).pow(exp))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx { .. } => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => ratio_to_f64(r),
            Value::Approx { value, .. } => *value,
        }
    }

    /// Absolute error bound; zero for exact values.
    pub fn err(&self) -> f64 {
        match self {
            Value::Exact(r) => {
                // Conversion to f64 is correctly rounded up to one ulp.
                if r.is_zero() {
                    0.0
                } else {
                    ratio_to_f64(r).abs() * ULP
                }
            }
            Value::Approx { err, .. } => *err,
        }
    }

    fn as_approx(&self) -> (f64, f64) {
        match self {
            Value::Exact(_) => (self.to_f64(), self.err()),
            Value::Approx { value, err } => (*value, *err),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_zero(),
            Value::Approx { value, .. } => *value == 0.0,
        }
    }

    pub fn neg(&self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(-r.clone()),
            Value::Approx { value, err } => Value::Approx { value: -value, err: *err },
        }
    }

    pub fn abs(&self) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(r.abs()),
            Value::Approx { value, err } => Value::Approx { value: value.abs(), err: *err },
        }
    }

    pub fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => {
                let (a, ea) = self.as_approx();
                let (b, eb) = other.as_approx();
                let s = a + b;
                Value::approx(s, ea + eb + s.abs() * ULP)
            }
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => {
                let (a, ea) = self.as_approx();
                let (b, eb) = other.as_approx();
                let p = a * b;
                Value::approx(p, a.abs() * eb + b.abs() * ea + ea * eb + p.abs() * ULP)
            }
        }
    }

    pub fn div(&self, other: &Value) -> Result<Value> {
        if other.is_zero() {
            return Err(Error::Precondition("division by zero".into()));
        }
        Ok(match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a / b),
            _ => {
                let (a, ea) = self.as_approx();
                let (b, eb) = other.as_approx();
                let q = a / b;
                let denom = (b.abs() - eb).max(f64::MIN_POSITIVE);
                Value::approx(q, (ea + q.abs() * eb) / denom + q.abs() * ULP)
            }
        })
    }

    pub fn scale(&self, k: u64) -> Value {
        self.mul(&Value::Exact(BigRational::from_integer(BigInt::from(k))))
    }

    pub fn powi(&self, exp: u32) -> Value {
        match self {
            Value::Exact(r) => Value::Exact(r.pow(exp as i32)),
            Value::Approx { .. } => {
                let mut acc = Value::one();
                for _ in 0..exp {
                    acc = acc.mul(self);
                }
                acc
            }
        }
    }

    /// Real power for a non-negative base. Integer exponents on exact bases
    /// stay exact.
    pub fn powf(&self, exp: f64) -> Value {
        if exp >= 0.0 && exp.fract() == 0.0 && exp <= u32::MAX as f64 {
            return self.powi(exp as u32);
        }
        let (x, e) = self.as_approx();
        let x = x.max(0.0);
        let v = x.powf(exp);
        // |d/dx x^a| = a x^(a-1); for a < 1 near zero fall back to the
        // interval width.
        let lo = (x - e).max(0.0).powf(exp);
        let hi = (x + e).powf(exp);
        let width = (v - lo).abs().max((hi - v).abs());
        Value::approx(v, width + v.abs() * 4.0 * ULP)
    }

    pub fn lower(&self) -> f64 {
        let (v, e) = self.as_approx();
        v - e
    }

    pub fn upper(&self) -> f64 {
        let (v, e) = self.as_approx();
        v + e
    }

    /// Certified comparison. `None` when the error bounds overlap.
    pub fn certified_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Some(a.cmp(b)),
            _ => {
                if self.upper() < other.lower() {
                    Some(Ordering::Less)
                } else if self.lower() > other.upper() {
                    Some(Ordering::Greater)
                } else {
                    None
                }
            }
        }
    }

    pub fn certainly_lt(&self, other: &Value) -> bool {
        self.certified_cmp(other) == Some(Ordering::Less)
    }

    pub fn certainly_le(&self, other: &Value) -> bool {
        match self.certified_cmp(other) {
            Some(Ordering::Less) | Some(Ordering::Equal) => true,
            Some(Ordering::Greater) => false,
            // Overlapping bounds: treat as `<=` only if the upper end is
            // within the other's upper end.
            None => self.lower() <= other.upper(),
        }
    }

    /// `|self - other| <= tol`, exact when both sides are exact and tol = 0.
    pub fn close_to(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => {
                let d = (a - b).abs();
                d <= float_to_ratio(tol)
            }
            _ => {
                let d = self.sub(other);
                d.to_f64().abs() <= tol + d.err()
            }
        }
    }

    pub fn from_f64_exact(x: f64) -> Result<Value> {
        BigRational::from_float(x)
            .map(Value::Exact)
            .ok_or_else(|| Error::Parse(format!("non-finite number {x}")))
    }

    pub fn max(a: Value, b: Value) -> Value {
        match a.certified_cmp(&b) {
            Some(Ordering::Less) => b,
            Some(_) => a,
            None => {
                if a.upper() >= b.upper() {
                    a
                } else {
                    b
                }
            }
        }
    }
}

pub fn float_to_ratio(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators/denominators: scale down via bit lengths.
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(900) as usize;
    let n2 = n >> shift;
    let d2 = d >> shift;
    match (n2.to_f64(), d2.to_f64()) {
        (Some(a), Some(b)) if b != 0.0 => a / b,
        _ => 0.0,
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Value::Approx { value, err } => write!(f, "{value:.15e}±{err:.1e}"),
        }
    }
}

impl FromStr for Value {
    type Err = Error;

    /// Accepts `p/q`, integers, and decimals. Decimal literals are read as
    /// the exact rational they denote (`0.1` is `1/10`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
            let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            return Ok(Value::Exact(BigRational::new(p, q)));
        }
        parse_decimal(s).map(Value::Exact)
    }
}

fn parse_decimal(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("bad number `{s}`"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut r = BigRational::from_integer(num) * ten.pow(scale);
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Sum of a sequence of values.
/// Serializes through `Display`, keeping exact values exact in reports.
pub fn serialize_display<S: serde::Serializer>(v: &Value, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn sum<'a, I: IntoIterator<Item = &'a Value>>(it: I) -> Value {
    it.into_iter().fold(Value::zero(), |acc, v| acc.add(v))
}
