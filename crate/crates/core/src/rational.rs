//! Exact rational scalars and their canonical `"num/den"` text form.
//!
//! Every probability, coefficient, bound, and optimum in this crate is a
//! [`Rational`]. The interchange format is a string `"num/den"` in lowest
//! terms with a positive denominator (`"0/1"`, `"-3/4"`); decimals are
//! rejected on input so exactness can never silently degrade.

use num::bigint::BigInt;
use num::BigRational;
use num::{One, Zero};

use crate::error::Error;

/// Arbitrary-precision exact rational number.
pub type Rational = BigRational;

/// `n` as a rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num/den` as a rational. Panics if `den == 0`; intended for literals.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Zero.
pub fn zero() -> Rational {
    Rational::zero()
}

/// One.
pub fn one() -> Rational {
    Rational::one()
}

/// Formats in canonical `"num/den"` form (always with a denominator).
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"num/den"` or a bare integer `"num"`. Rejects zero denominators,
/// empty parts, and anything non-integral (no decimal points, no exponents).
pub fn parse(s: &str) -> Result<Rational, Error> {
    let s = s.trim();
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num_str
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational numerator in {s:?}")))?;
    let den: BigInt = den_str
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational denominator in {s:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(num, den))
}

/// Serde adapter: a [`Rational`] field as a `"num/den"` string.
pub mod serde_rational {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(de::Error::custom)
    }
}

/// Serde adapter: a `Vec<Rational>` field as a list of `"num/den"` strings.
pub mod serde_rational_vec {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(super::format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|s| super::parse(s).map_err(de::Error::custom))
            .collect()
    }
}

/// Serde adapter: an `Option<Rational>` field as an optional `"num/den"` string.
pub mod serde_rational_opt {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| super::parse(&s).map_err(de::Error::custom))
            .transpose()
    }
}

/// Serde adapter: an `Option<Vec<Rational>>` field as an optional list of
/// `"num/den"` strings.
pub mod serde_rational_vec_opt {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => {
                let strings: Vec<String> = v.iter().map(super::format).collect();
                s.serialize_some(&strings)
            }
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Vec<Rational>>, D::Error> {
        let strings = Option::<Vec<String>>::deserialize(d)?;
        strings
            .map(|v| {
                v.iter()
                    .map(|s| super::parse(s).map_err(de::Error::custom))
                    .collect()
            })
            .transpose()
    }
}

/// Serde adapter: a `(Rational, Rational)` pair as a two-element list of
/// `"num/den"` strings.
pub mod serde_rational_pair {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::Rational;

    pub fn serialize<S: Serializer>(p: &(Rational, Rational), s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([super::format(&p.0), super::format(&p.1)])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<(Rational, Rational), D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        Ok((
            super::parse(&a).map_err(de::Error::custom)?,
            super::parse(&b).map_err(de::Error::custom)?,
        ))
    }
}
