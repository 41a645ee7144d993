//! Helpers around exact rationals: parsing the `"p/q"` wire format, float
//! conversion at the conic boundary, and rational upper bounds on square roots.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// Denominator used for rational upper bounds on irrational square roots.
pub const SQRT_DENOMINATOR: u64 = 1_000_000;

/// Parses `"p/q"` or `"p"` with optional sign. Decimal points and exponents are
/// rejected so that every literal is exact.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::ParseRational(text.to_string());
    if s.is_empty() {
        return Err(bad());
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let valid = |t: &str, allow_sign: bool| {
        let digits = if allow_sign {
            t.strip_prefix('-')
                .or_else(|| t.strip_prefix('+'))
                .unwrap_or(t)
        } else {
            t
        };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num, true) || !valid(den, false) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact square root when `q` is the square of a rational.
pub fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// Rational `u ≥ √q`. Exact when `q` is a rational square, otherwise the
/// smallest multiple of `1/SQRT_DENOMINATOR` whose square is at least `q`.
/// The flag reports whether the result is exact.
pub fn sqrt_upper(q: &Rational) -> (Rational, bool) {
    assert!(!q.is_negative(), "sqrt_upper of a negative rational");
    if let Some(root) = exact_sqrt(q) {
        return (root, true);
    }
    let scale = BigInt::from(SQRT_DENOMINATOR);
    // smallest k with k² ≥ q·scale², i.e. k² · den ≥ num · scale²
    let target = q.numer() * &scale * &scale;
    let den = q.denom();
    let mut k = (&target / den).sqrt();
    while &k * &k * den < target {
        k += 1;
    }
    (Rational::new(k, scale), false)
}

/// `base^exp` for a nonnegative integer exponent.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn is_integer_valued(q: &Rational) -> bool {
    q.denom().is_one()
}

/// Ceiling of a rational as a big integer.
pub fn ceil(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

/// Smallest integer strictly greater than `q`.
pub fn next_integer_above(q: &Rational) -> BigInt {
    q.floor().to_integer() + 1
}

pub fn sign(q: &Rational) -> Sign {
    q.numer().sign()
}

/// Serde adapter storing a rational as its `"p/q"` string.
pub mod as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::Rational;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(q)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational("-6/8").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(parse_rational("+2").unwrap(), int(2));
    }

    #[test]
    fn rejects_decimals_and_garbage() {
        for bad in ["0.5", "1e3", "", "1/0", "a/b", "1/-2", "--1", "/3"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn sqrt_upper_is_exact_on_squares() {
        assert_eq!(sqrt_upper(&ratio(9, 4)), (ratio(3, 2), true));
        assert_eq!(sqrt_upper(&int(1)), (int(1), true));
    }

    #[test]
    fn sqrt_upper_bounds_irrational_roots() {
        let (u, exact) = sqrt_upper(&int(2));
        assert!(!exact);
        assert!(&u * &u >= int(2));
        let below = &u - ratio(1, SQRT_DENOMINATOR as i64);
        assert!(&below * &below < int(2));
        assert_eq!(u, ratio(1_414_214, 1_000_000));
    }

    #[test]
    fn next_integer_above_is_strict() {
        assert_eq!(next_integer_above(&int(0)), BigInt::from(1));
        assert_eq!(next_integer_above(&int(-1)), BigInt::from(0));
        assert_eq!(next_integer_above(&ratio(3, 2)), BigInt::from(2));
        assert_eq!(next_integer_above(&ratio(-3, 2)), BigInt::from(-1));
    }
}
