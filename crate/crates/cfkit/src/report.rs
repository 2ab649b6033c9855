//! Exact-rational report plumbing: every ratio the crate emits is a
//! `BigRational` and serializes as a canonical `"p/q"` string.

use num::{BigRational, One, Signed, Zero};

use crate::error::{CfError, Result};

/// Canonical "p/q" rendering (reduced, positive denominator).
pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_ratio(text: &str) -> Result<BigRational> {
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n = num
        .trim()
        .parse::<num::BigInt>()
        .map_err(|_| CfError::ParseError(format!("bad rational {text:?}")))?;
    let d = den
        .trim()
        .parse::<num::BigInt>()
        .map_err(|_| CfError::ParseError(format!("bad rational {text:?}")))?;
    if d.is_zero() {
        return Err(CfError::ParseError(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(n, d))
}

pub fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn zero() -> BigRational {
    BigRational::zero()
}

pub fn is_nonnegative(r: &BigRational) -> bool {
    !r.is_negative()
}

/// Serde adapter for `BigRational` fields: "p/q" strings on the wire.
pub mod ratio_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<BigRational>` fields.
pub mod ratio_vec_serde {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        rs: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(rs.iter().map(ratio_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_ratio(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = ratio(13, 9);
        assert_eq!(ratio_string(&r), "13/9");
        assert_eq!(parse_ratio("13/9").unwrap(), r);
        assert_eq!(parse_ratio("3").unwrap(), ratio(3, 1));
        assert_eq!(parse_ratio("-2/4").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert!(parse_ratio("1/0").is_err());
    }
}
