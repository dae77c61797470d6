//! The exact scalar type used throughout the crate.
//!
//! [`Rational`] is an arbitrary-precision signed fraction, always stored in
//! lowest terms with a positive denominator. Its `Display` form is
//! `"num/den"` (or just `"num"` when the denominator is one), which is also
//! the form accepted by [`parse`].

use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// `numer / denom` as an exact rational. Panics if `denom == 0`.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// `(-1)^exponent`.
pub fn sign_power(exponent: usize) -> Rational {
    if exponent % 2 == 0 {
        one()
    } else {
        -one()
    }
}

pub fn max(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// `constant + Σ a·b`, reduced once at the end instead of after every
/// operation.
pub fn affine_sum<'a>(
    constant: &Rational,
    terms: impl IntoIterator<Item = (&'a Rational, &'a Rational)>,
) -> Rational {
    let mut numer = constant.numer().clone();
    let mut denom = constant.denom().clone();
    for (a, b) in terms {
        if a.is_zero() || b.is_zero() {
            continue;
        }
        let term_numer = a.numer() * b.numer();
        if a.denom().is_one() && b.denom().is_one() {
            numer += term_numer * &denom;
            continue;
        }
        let term_denom = a.denom() * b.denom();
        if term_denom == denom {
            numer += term_numer;
        } else {
            numer = numer * &term_denom + term_numer * &denom;
            denom *= term_denom;
        }
    }
    Rational::new(numer, denom)
}

pub fn relu(value: &Rational) -> Rational {
    if value.is_positive() {
        value.clone()
    } else {
        zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    input: alloc::string::String,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid rational {:?}: expected \"numerator/denominator\" or an integer",
            self.input
        )
    }
}

impl core::error::Error for ParseRationalError {}

/// Parses `"n"` or `"n/d"` with `d != 0`. Surrounding whitespace is not
/// accepted; the result is reduced.
pub fn parse(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.into(),
    };
    let valid_int = |s: &str| {
        let digits = s.strip_prefix('-').unwrap_or(s);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    let (numer, denom) = match input.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (input, None),
    };
    if !valid_int(numer) || denom.is_some_and(|d| !valid_int(d)) {
        return Err(err());
    }
    let numer = BigInt::from_str(numer).map_err(|_| err())?;
    let denom = match denom {
        Some(d) => BigInt::from_str(d).map_err(|_| err())?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(numer, denom))
}

/// Nearest `f64`, for plotting and the floating-point oracles only.
pub fn to_f64(value: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn affine_sum_matches_stepwise(c in (-50i64..50, 1i64..20), terms in proptest::collection::vec(((-50i64..50, 1i64..20), (-50i64..50, 1i64..20)), 0..12)) {
            let terms: Vec<(Rational, Rational)> = terms.into_iter().map(|(a, b)| (ratio(a.0, a.1), ratio(b.0, b.1))).collect();
            let c = ratio(c.0, c.1);
            let stepwise = terms.iter().fold(c.clone(), |acc, (a, b)| acc + a * b);
            let fused = affine_sum(&c, terms.iter().map(|(a, b)| (a, b)));
            prop_assert_eq!(fused.denom() > &BigInt::zero(), true);
            prop_assert_eq!(fused, stepwise);
        }
    }

    #[test]
    fn parse_accepts_integers_and_fractions() {
        assert_eq!(parse("5").unwrap(), int(5));
        assert_eq!(parse("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse("6/-4").unwrap(), ratio(-3, 2));
        assert_eq!(parse("10/4").unwrap().to_string(), "5/2");
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in [
            "", "1/0", "1.5", " 1", "1/", "/2", "a/b", "1/2/3", "+1", "--1",
        ] {
            assert!(parse(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn display_is_reduced() {
        assert_eq!(ratio(-14, 6).to_string(), "-7/3");
        assert_eq!(int(-2).to_string(), "-2");
        assert_eq!(ratio(0, 5).to_string(), "0");
    }

    #[test]
    fn to_f64_is_close() {
        assert_eq!(to_f64(&ratio(1, 4)), 0.25);
        assert!((to_f64(&ratio(1, 3)) - 1.0 / 3.0).abs() < 1e-16);
    }
}
