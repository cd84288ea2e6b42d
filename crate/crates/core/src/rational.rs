//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

pub type Rational = num_rational::BigRational;

/// `num / den` as an exact rational.
pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn from_usize(v: usize) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn is_integral(x: &Rational) -> bool {
    x.denom().is_one()
}

pub fn floor_usize(x: &Rational) -> usize {
    x.floor().to_integer().to_usize().unwrap_or(0)
}

pub fn ceil_div(a: usize, b: usize) -> usize {
    Integer::div_ceil(&a, &b)
}

/// Smallest `k` with `2^k >= n` (0 for `n <= 1`).
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn to_text(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => {
            if let Some((whole, frac)) = s.split_once('.') {
                // Decimal literals are read exactly.
                let neg = whole.starts_with('-');
                let digits = format!("{}{}", whole.trim_start_matches('-'), frac);
                let n: BigInt = digits.parse().ok()?;
                let d = num_traits::pow(BigInt::from(10), frac.len());
                let r = Rational::new(n, d);
                Some(if neg { -r } else { r })
            } else {
                Some(Rational::from_integer(s.parse().ok()?))
            }
        }
    }
}

pub fn sum<'a>(it: impl IntoIterator<Item = &'a Rational>) -> Rational {
    it.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

pub fn is_probability(x: &Rational) -> bool {
    !x.is_negative() && *x <= Rational::one()
}

/// Serde adapter storing a rational as its canonical text form. Integer JSON
/// numbers are accepted on input.
pub mod text {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_text(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        from_json(&v).ok_or_else(|| de::Error::custom(format!("not a rational: {v}")))
    }

    pub(crate) fn from_json(v: &serde_json::Value) -> Option<Rational> {
        match v {
            serde_json::Value::String(s) => parse(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Some(int(i))
                } else {
                    parse(&n.to_string())
                }
            }
            _ => None,
        }
    }
}

pub mod text_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&to_text(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<serde_json::Value>::deserialize(d)?;
        v.iter()
            .map(|x| {
                text::from_json(x).ok_or_else(|| de::Error::custom(format!("not a rational: {x}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6"), Some(q(1, 2)));
        assert_eq!(parse("-4"), Some(int(-4)));
        assert_eq!(parse("0.25"), Some(q(1, 4)));
        assert_eq!(parse("-1.5"), Some(q(-3, 2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(to_text(&q(6, 4)), "3/2");
        assert_eq!(to_text(&int(7)), "7");
    }

    #[test]
    fn log_and_ceil() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(8, 2), 4);
    }
}
