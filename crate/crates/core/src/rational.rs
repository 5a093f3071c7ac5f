//! Exact rational scalars shared by the exact-mode code paths.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{GapError, Result};

pub type Rational = Ratio<i128>;

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.125"` into an
/// exact rational. Decimals are read digit by digit, never through `f64`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || GapError::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: i128 = num.trim().parse().map_err(|_| bad())?;
        let den: i128 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(GapError::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let denom = 10i128
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| GapError::Overflow(format!("too many decimals in {text:?}")))?;
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

pub fn to_f64(q: &Rational) -> f64 {
    // Ratio::to_f64 rounds correctly even when numerator and denominator
    // individually exceed f64 range.
    q.to_f64().unwrap_or_else(|| *q.numer() as f64 / *q.denom() as f64)
}

/// Reduces `x` into `[0, modulus)`.
pub fn rem_euclid(x: &Rational, modulus: &Rational) -> Rational {
    debug_assert!(modulus.is_positive());
    let q = (x / modulus).floor();
    let r = x - q * modulus;
    if r.is_negative() {
        r + modulus
    } else {
        r
    }
}

pub fn is_zero(q: &Rational) -> bool {
    q.is_zero()
}

/// Always renders as `p/q` so downstream parsers see one shape.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Serializes rationals as `"p/q"` strings.
pub mod serde_rational {
    use super::{format_rational, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub mod vec {
        use super::super::{format_rational, Rational};
        use serde::ser::{SerializeSeq, Serializer};

        pub fn serialize<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(qs.len()))?;
            for q in qs {
                seq.serialize_element(&format_rational(q))?;
            }
            seq.end()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("355/113").unwrap(), Rational::new(355, 113));
        assert_eq!(parse_rational("-0.125").unwrap(), Rational::new(-1, 8));
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7));
        assert_eq!(parse_rational(".5").unwrap(), Rational::new(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn rem_euclid_lands_in_range() {
        let m = Rational::from_integer(3);
        assert_eq!(rem_euclid(&Rational::new(-1, 2), &m), Rational::new(5, 2));
        assert_eq!(rem_euclid(&Rational::from_integer(6), &m), Rational::from_integer(0));
        assert_eq!(rem_euclid(&Rational::new(7, 2), &m), Rational::new(1, 2));
    }

    #[test]
    fn formatting_is_always_a_fraction() {
        assert_eq!(format_rational(&Rational::from_integer(4)), "4/1");
        assert_eq!(format_rational(&Rational::new(2, 6)), "1/3");
    }
}
