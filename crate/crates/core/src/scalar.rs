//! Dual-mode arithmetic: exact rationals when the step probability is given
//! as a fraction, `f64` otherwise.

use std::fmt;
use std::str::FromStr;

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Below this distance from 1/2 the `p != 1/2` branches of the gambler's-ruin
/// formulas are 0/0 in floating point; the `p = 1/2` branch is used instead.
pub const HALF_CROSSOVER: f64 = 1e-9;

/// Arithmetic needed by the closed-form evaluators.
pub trait Field:
    Clone
    + fmt::Debug
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + Zero
    + One
{
    fn from_count(v: u64) -> Self;
    fn to_float(&self) -> f64;
    /// True when the value should be treated as exactly 1/2.
    fn is_half(&self) -> bool;

    fn powi(&self, exp: u64) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn complement(&self) -> Self {
        Self::one() - self.clone()
    }
}

impl Field for f64 {
    fn from_count(v: u64) -> Self {
        v as f64
    }
    fn to_float(&self) -> f64 {
        *self
    }
    fn is_half(&self) -> bool {
        (self - 0.5).abs() < HALF_CROSSOVER
    }
    fn powi(&self, exp: u64) -> Self {
        match i32::try_from(exp) {
            Ok(e) => f64::powi(*self, e),
            Err(_) => self.powf(exp as f64),
        }
    }
}

impl Field for BigRational {
    fn from_count(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_float(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn is_half(&self) -> bool {
        *self == BigRational::new(1.into(), 2.into())
    }
}

/// Converts a big rational to the nearest-ish `f64`, staying finite when
/// numerator and denominator individually overflow `f64`.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    if let (Some(a), Some(b)) = (n.to_f64(), d.to_f64()) {
        if a.is_finite() && b.is_finite() && b != 0.0 {
            return a / b;
        }
    }
    let sign = if n.sign() == Sign::Minus { -1.0 } else { 1.0 };
    let nb = n.abs().bits() as i64;
    let db = d.bits() as i64;
    // keep 60 significant bits of each
    let ns = (nb - 60).max(0);
    let ds = (db - 60).max(0);
    let a = (n.abs() >> ns as usize).to_f64().unwrap_or(0.0);
    let b = (d.clone() >> ds as usize).to_f64().unwrap_or(1.0);
    sign * (a / b) * 2f64.powi((ns - ds) as i32)
}

/// Exact ratio `a/b` of integers.
pub fn rational(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

/// A step probability as supplied by the user. The syntax decides the mode:
/// `a/b` is exact, anything else is parsed as a decimal float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum StepProbability {
    Exact(BigRational),
    Float(f64),
}

impl StepProbability {
    pub fn exact(a: i64, b: i64) -> Result<Self> {
        if b == 0 {
            return Err(validation("probability denominator is zero"));
        }
        Self::check(StepProbability::Exact(rational(a, b)))
    }

    pub fn float(p: f64) -> Result<Self> {
        Self::check(StepProbability::Float(p))
    }

    fn check(self) -> Result<Self> {
        let ok = match &self {
            StepProbability::Exact(r) => !r.is_negative() && *r <= BigRational::one(),
            StepProbability::Float(f) => f.is_finite() && (0.0..=1.0).contains(f),
        };
        if ok {
            Ok(self)
        } else {
            Err(validation(format!("probability {self} is outside [0, 1]")))
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            StepProbability::Exact(r) => ratio_to_f64(r),
            StepProbability::Float(f) => *f,
        }
    }

    pub fn mode(&self) -> ValueMode {
        match self {
            StepProbability::Exact(_) => ValueMode::ExactRational,
            StepProbability::Float(_) => ValueMode::Float,
        }
    }

    /// `1 - p` in the same mode.
    pub fn complement(&self) -> Self {
        match self {
            StepProbability::Exact(r) => StepProbability::Exact(BigRational::one() - r),
            StepProbability::Float(f) => StepProbability::Float(1.0 - f),
        }
    }
}

impl FromStr for StepProbability {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: i64 = a
                .trim()
                .parse()
                .map_err(|_| validation(format!("bad numerator in {s:?}")))?;
            let b: i64 = b
                .trim()
                .parse()
                .map_err(|_| validation(format!("bad denominator in {s:?}")))?;
            StepProbability::exact(a, b)
        } else {
            let f: f64 = s
                .parse()
                .map_err(|_| validation(format!("cannot parse probability {s:?}")))?;
            StepProbability::float(f)
        }
    }
}

impl fmt::Display for StepProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepProbability::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            StepProbability::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<StepProbability> for String {
    fn from(p: StepProbability) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for StepProbability {
    type Error = crate::Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueMode {
    ExactRational,
    Float,
}

/// A probability (or other closed-form value) in the mode it was computed in.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityValue {
    Exact(BigRational),
    Float(f64),
}

impl ProbabilityValue {
    pub fn mode(&self) -> ValueMode {
        match self {
            ProbabilityValue::Exact(_) => ValueMode::ExactRational,
            ProbabilityValue::Float(_) => ValueMode::Float,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ProbabilityValue::Exact(r) => ratio_to_f64(r),
            ProbabilityValue::Float(f) => *f,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            ProbabilityValue::Exact(r) => Some(r),
            ProbabilityValue::Float(_) => None,
        }
    }
}

impl fmt::Display for ProbabilityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbabilityValue::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            ProbabilityValue::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ProbabilityValue::Float(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ProbabilityValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ProbabilityValue", 3)?;
        st.serialize_field("mode", &self.mode())?;
        st.serialize_field("value", &self.to_string())?;
        st.serialize_field("approx", &self.as_f64())?;
        st.end()
    }
}

/// Evaluates `f` in the mode selected by `p`.
pub fn eval_mode<F, G>(p: &StepProbability, exact: F, float: G) -> Result<ProbabilityValue>
where
    F: FnOnce(&BigRational) -> Result<BigRational>,
    G: FnOnce(f64) -> Result<f64>,
{
    Ok(match p {
        StepProbability::Exact(r) => ProbabilityValue::Exact(exact(r)?),
        StepProbability::Float(f) => ProbabilityValue::Float(float(*f)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_picks_mode_by_syntax() {
        let p: StepProbability = "1/2".parse().unwrap();
        assert_eq!(p.mode(), ValueMode::ExactRational);
        assert!(Field::is_half(match &p {
            StepProbability::Exact(r) => r,
            _ => unreachable!(),
        }));
        let p: StepProbability = "0.5".parse().unwrap();
        assert_eq!(p.mode(), ValueMode::Float);
        assert!("3/2".parse::<StepProbability>().is_err());
        assert!("-0.1".parse::<StepProbability>().is_err());
        assert!("1/0".parse::<StepProbability>().is_err());
        assert!("abc".parse::<StepProbability>().is_err());
    }

    #[test]
    fn big_ratio_to_f64_stays_finite() {
        let big = BigInt::from(10).pow(400u32);
        let r = BigRational::new(big.clone() * 3, big * 4);
        assert!((ratio_to_f64(&r) - 0.75).abs() < 1e-15);
        let tiny = BigRational::new(1.into(), BigInt::from(2).pow(1100u32));
        assert_eq!(ratio_to_f64(&tiny), 0.0);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let r = rational(2, 3);
        assert_eq!(Field::powi(&r, 5), rational(32, 243));
        assert_eq!(Field::powi(&0.5f64, 3), 0.125);
    }
}
