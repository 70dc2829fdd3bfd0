//! Exact-number rendering: decimal strings with a fixed number of
//! significant digits, and serde adapters that keep big integers and
//! rationals lossless in JSON.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// `r` rounded half-up to `sig` significant digits. Positional notation
/// for moderate exponents, `d.ddde-N` otherwise; trailing zeros trimmed.
pub fn decimal(r: &BigRational, sig: usize) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".into();
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let a = r.abs();
    let ten = BigInt::from(10);
    let pow10 = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::from(num_traits::pow(ten.clone(), e as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(ten.clone(), (-e) as usize))
        }
    };
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    while pow10(e) > a {
        e -= 1;
    }
    while pow10(e + 1) <= a {
        e += 1;
    }
    let scaled = &a * pow10(sig as i64 - 1 - e);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut n = (scaled + half).floor().to_integer();
    if n == num_traits::pow(ten.clone(), sig) {
        n /= &ten;
        e += 1;
    }
    let digits = n.to_string();
    let body = if (-7..21).contains(&e) {
        if e >= 0 {
            let int_len = e as usize + 1;
            let padded = if digits.len() < int_len {
                format!("{digits}{}", "0".repeat(int_len - digits.len()))
            } else {
                digits.clone()
            };
            let (i, f) = padded.split_at(int_len);
            trim(format!("{i}.{f}"))
        } else {
            trim(format!("0.{}{digits}", "0".repeat((-e - 1) as usize)))
        }
    } else {
        let (h, t) = digits.split_at(1);
        format!("{}e{e}", trim(format!("{h}.{t}")))
    };
    format!("{sign}{body}")
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// A rational as it appears in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactValue {
    pub num: String,
    pub den: String,
    pub decimal: String,
}

impl From<&BigRational> for ExactValue {
    fn from(r: &BigRational) -> Self {
        ExactValue {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            decimal: decimal(r, 12),
        }
    }
}

impl ExactValue {
    pub fn to_rational(&self) -> Option<BigRational> {
        let n: BigInt = self.num.parse().ok()?;
        let d: BigInt = self.den.parse().ok()?;
        (!d.is_zero()).then(|| BigRational::new(n, d))
    }
}

/// `BigRational` as an [`ExactValue`] object.
pub mod rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        ExactValue::from(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        ExactValue::deserialize(d)?
            .to_rational()
            .ok_or_else(|| serde::de::Error::custom("malformed rational"))
    }
}

pub mod rational_opt {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        r.as_ref().map(ExactValue::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        match Option::<ExactValue>::deserialize(d)? {
            None => Ok(None),
            Some(v) => v
                .to_rational()
                .map(Some)
                .ok_or_else(|| serde::de::Error::custom("malformed rational")),
        }
    }
}

/// `BigUint` as a decimal string.
pub mod biguint {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub mod biguint_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigUint>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|x| x.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `BigInt` as a decimal string.
pub mod bigint {
    use super::*;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Exact ratio of two big naturals, reduced.
pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// `a / b` with `b > 0` as an exact value in lowest terms.
pub fn frac(a: u64, b: u64) -> BigRational {
    let g = a.gcd(&b).max(1);
    BigRational::new(BigInt::from(a / g), BigInt::from(b / g))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal(&q(1, 2), 12), "0.5");
        assert_eq!(decimal(&q(1, 3), 12), "0.333333333333");
        assert_eq!(decimal(&q(2, 3), 12), "0.666666666667");
        assert_eq!(decimal(&q(1, 1), 12), "1");
        assert_eq!(decimal(&q(0, 1), 12), "0");
        assert_eq!(decimal(&q(-5, 4), 12), "-1.25");
        assert_eq!(decimal(&q(999_999_999_999_9, 10_000_000_000_000), 12), "1");
        assert_eq!(decimal(&q(1, 36), 3), "0.0278");
        assert_eq!(decimal(&q(12345, 1), 3), "12300");
        let tiny = BigRational::new(1.into(), num_traits::pow(BigInt::from(10), 42) * 3);
        assert_eq!(decimal(&tiny, 12), "3.33333333333e-43");
    }

    #[test]
    fn exact_value_round_trip() {
        let r = q(7, 12);
        let v = ExactValue::from(&r);
        assert_eq!(v.to_rational().unwrap(), r);
        assert_eq!((v.num.as_str(), v.den.as_str()), ("7", "12"));
    }
}
