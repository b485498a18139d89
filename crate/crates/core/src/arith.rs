//! Small exact-arithmetic helpers shared by the enumeration and p-adic code.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact integer square root of a nonnegative value, `None` unless `n` is a perfect square.
pub fn exact_sqrt(n: i128) -> Option<i128> {
    if n < 0 {
        return None;
    }
    let r = (n as u128).isqrt() as i128;
    (r * r == n).then_some(r)
}

/// Integer roots of `a t^2 + b t + c = 0`, ascending and deduplicated.
pub fn integer_roots_quadratic(a: i128, b: i128, c: i128) -> Vec<i128> {
    if a == 0 {
        if b == 0 {
            // constant equation: caller handles the "every t" case separately
            return Vec::new();
        }
        return if c % b == 0 { vec![-c / b] } else { Vec::new() };
    }
    let Some(disc) = b
        .checked_mul(b)
        .and_then(|bb| a.checked_mul(c).and_then(|ac| ac.checked_mul(4)).and_then(|ac4| bb.checked_sub(ac4)))
    else {
        return Vec::new();
    };
    let Some(s) = exact_sqrt(disc) else {
        return Vec::new();
    };
    let mut roots = Vec::with_capacity(2);
    for num in [-b - s, -b + s] {
        if num % (2 * a) == 0 {
            roots.push(num / (2 * a));
        }
    }
    roots.sort_unstable();
    roots.dedup();
    roots
}

pub fn gcd_slice(xs: &[i64]) -> u64 {
    xs.iter().fold(0u64, |g, &x| g.gcd(&x.unsigned_abs()))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation of a nonzero integer.
pub fn valuation_i128(mut n: i128, p: u64) -> u32 {
    debug_assert!(n != 0);
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn valuation_bigint(n: &BigInt, p: u64) -> u32 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn valuation_rational(x: &BigRational, p: u64) -> i64 {
    valuation_bigint(x.numer(), p) as i64 - valuation_bigint(x.denom(), p) as i64
}

pub fn pow_u64(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e).ok_or(Error::Overflow)
}

pub fn big_pow(p: u64, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(p));
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        num_traits::pow(base, (-e) as usize).recip()
    }
}

/// Formats an exact rational as `"p/q"` (or `"p"` when integral).
pub fn format_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse = |t: &str| {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad rational {s:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse(s)?)),
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter: a vector of rationals as `["p/q", ...]`.
pub mod serde_rational_vec {
    use super::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde adapter: a single rational as `"p/q"`.
pub mod serde_rational {
    use super::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_roots() {
        assert_eq!(integer_roots_quadratic(1, 0, -4), vec![-2, 2]);
        assert_eq!(integer_roots_quadratic(1, -2, 1), vec![1]);
        assert_eq!(integer_roots_quadratic(1, 0, -3), Vec::<i128>::new());
        assert_eq!(integer_roots_quadratic(2, 0, -2), vec![-1, 1]);
        assert_eq!(integer_roots_quadratic(0, 3, -6), vec![2]);
        assert_eq!(integer_roots_quadratic(0, 3, -5), Vec::<i128>::new());
        // 4t^2 - 1 = 0 has rational but no integer roots
        assert!(integer_roots_quadratic(4, 0, -1).is_empty());
    }

    #[test]
    fn rationals_round_trip_text() {
        let x = parse_rational("-6/4").unwrap();
        assert_eq!(format_rational(&x), "-3/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation_i128(24, 2), 3);
        assert_eq!(valuation_rational(&parse_rational("9/2").unwrap(), 2), -1);
        assert_eq!(valuation_rational(&parse_rational("9/2").unwrap(), 3), 2);
        assert!(is_prime(7) && !is_prime(9) && !is_prime(1));
    }

    #[test]
    fn huge_rational_to_float() {
        let x = big_pow(3, 400) / big_pow(3, 399);
        assert!((rational_to_f64(&x) - 3.0).abs() < 1e-12);
        let y = big_pow(2, 1100);
        let f = rational_to_f64(&(y / big_pow(2, 1098)));
        assert!((f - 4.0).abs() < 1e-12);
    }
}
