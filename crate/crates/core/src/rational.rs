//! Arbitrary-precision rationals and the small amount of elementary number
//! theory the towers need (square classes, square-freeness).

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational number. `BigRational` keeps the denominator positive and the
/// fraction in lowest terms after every operation.
pub type Rational = num_rational::BigRational;

/// Default trial-division bound used by [`is_square_free`].
pub const DEFAULT_SQUAREFREE_BOUND: u64 = 1_000_000;

/// Environment variable consulted by front ends for the trial-division bound.
pub const SQUAREFREE_BOUND_ENV: &str = "WEAKCM_SQUAREFREE_BOUND";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("malformed rational literal {0:?}")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"a"`, `"a/b"` (surrounding whitespace allowed, sign on numerator or
/// denominator).
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let t = s.trim();
    let bad = || RationalParseError::Malformed(s.to_string());
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(RationalParseError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// `"num/den"`, with the denominator omitted when it is 1.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Serde adapter so rationals appear as strings in documents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RationalStr(pub Rational);

impl fmt::Display for RationalStr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for RationalStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for RationalStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        let q = match Raw::deserialize(d)? {
            Raw::Str(s) => parse_rational(&s).map_err(serde::de::Error::custom)?,
            Raw::Int(i) => int(i),
        };
        Ok(RationalStr(q))
    }
}

impl From<Rational> for RationalStr {
    fn from(q: Rational) -> Self {
        RationalStr(q)
    }
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

/// True iff `a/d` is a positive rational square, i.e. `a ∈ d·(ℚ^×)²`.
pub fn square_class_test(a: &Rational, d: &Rational) -> bool {
    assert!(!d.is_zero(), "square class of zero is undefined");
    let r = a / d;
    r.is_positive() && is_perfect_square(r.numer()) && is_perfect_square(r.denom())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SquareFreeError {
    #[error("square-freeness of {value} is inconclusive below trial bound {bound}")]
    Inconclusive { value: BigInt, bound: u64 },
}

/// Trial division up to `bound`. `Ok(false)` as soon as a square factor is
/// found; an error when the unfactored cofactor is too large to decide.
pub fn is_square_free(n: &BigInt, bound: u64) -> Result<bool, SquareFreeError> {
    let mut m = n.abs();
    if m.is_zero() {
        return Ok(false);
    }
    let mut p: u64 = 2;
    while p <= bound {
        let bp = BigInt::from(p);
        if &bp * &bp > m {
            return Ok(true);
        }
        let (q, r) = m.div_rem(&bp);
        if r.is_zero() {
            m = q;
            if (&m % &bp).is_zero() {
                return Ok(false);
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    // Remaining cofactor has no prime factor <= bound.  It is square-free
    // unless it is a square of a prime > bound, or has more factors than we
    // can see.
    let bb = BigInt::from(bound);
    if m <= &bb * &bb {
        return Ok(true);
    }
    if is_perfect_square(&m) {
        return Ok(false);
    }
    if m <= &bb * &bb * &bb {
        // m = p·q with p, q > bound distinct, or prime.
        return Ok(true);
    }
    Err(SquareFreeError::Inconclusive {
        value: n.clone(),
        bound,
    })
}

/// Reads the square-free bound from the environment, falling back to the
/// default when unset or unparsable.
pub fn squarefree_bound_from_env() -> u64 {
    std::env::var(SQUAREFREE_BOUND_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_SQUAREFREE_BOUND)
}

/// Exact rational square root when it exists.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer(), q.denom());
    if is_perfect_square(n) && is_perfect_square(d) {
        Some(Rational::new(n.sqrt(), d.sqrt()))
    } else {
        None
    }
}

pub fn to_f64_lossy(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
