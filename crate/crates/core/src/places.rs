//! Finite sets of places `S = {inf} ∪ {p_1, ..., p_r}` and S-integral points.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd_slice, is_prime};
use crate::error::{Error, Result};

/// The places of Q in `S`. The archimedean place is always included.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPlaces", into = "RawPlaces")]
pub struct PlaceSet {
    finite_primes: Vec<u64>,
}

impl PlaceSet {
    pub fn new(mut primes: Vec<u64>) -> Result<Self> {
        primes.sort_unstable();
        if let Some(w) = primes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPlaces(format!("prime {} listed twice", w[0])));
        }
        if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::InvalidPlaces(format!("{p} is not prime")));
        }
        Ok(PlaceSet { finite_primes: primes })
    }

    /// `S = {inf}`.
    pub fn archimedean() -> Self {
        PlaceSet::default()
    }

    pub fn finite_primes(&self) -> &[u64] {
        &self.finite_primes
    }

    pub fn includes_infinity(&self) -> bool {
        true
    }

    /// Product of the finite primes.
    pub fn m_s(&self) -> u64 {
        self.finite_primes.iter().product()
    }

    /// Whether `v` lies in the semigroup `<S>` generated by the finite primes
    /// (positive, with prime support inside S; `1` is the empty product).
    pub fn in_semigroup(&self, v: i128) -> bool {
        if v <= 0 {
            return false;
        }
        let mut rest = v as u128;
        for &p in &self.finite_primes {
            let p = p as u128;
            while rest.is_multiple_of(p) {
                rest /= p;
            }
        }
        rest == 1
    }

    /// Whether every prime factor of `q` lies in S.
    pub fn supports(&self, q: u64) -> bool {
        q > 0 && self.in_semigroup(q as i128)
    }

    /// All elements of `<S>` up to `bound`, ascending.
    pub fn semigroup_up_to(&self, bound: u128) -> Vec<u128> {
        let mut out = vec![1u128];
        if bound < 1 {
            return Vec::new();
        }
        for &p in &self.finite_primes {
            let mut extra = Vec::new();
            for &v in &out {
                let mut w = v;
                while let Some(next) = w.checked_mul(p as u128).filter(|&n| n <= bound) {
                    extra.push(next);
                    w = next;
                }
            }
            out.extend(extra);
        }
        out.sort_unstable();
        out
    }

    /// Exponents `(p, v_p(q))` of an element of `<S>`.
    pub fn exponents(&self, mut q: u128) -> Option<Vec<(u64, u32)>> {
        let mut out = Vec::with_capacity(self.finite_primes.len());
        for &p in &self.finite_primes {
            let mut e = 0;
            while q.is_multiple_of(p as u128) {
                q /= p as u128;
                e += 1;
            }
            out.push((p, e));
        }
        (q == 1).then_some(out)
    }
}

#[derive(Serialize, Deserialize)]
struct RawPlaces {
    finite_primes: Vec<u64>,
}

impl TryFrom<RawPlaces> for PlaceSet {
    type Error = Error;
    fn try_from(raw: RawPlaces) -> Result<Self> {
        PlaceSet::new(raw.finite_primes)
    }
}

impl From<PlaceSet> for RawPlaces {
    fn from(s: PlaceSet) -> Self {
        RawPlaces { finite_primes: s.finite_primes }
    }
}

/// An S-integral point `z = x / q` with `q` supported on the finite primes of S.
///
/// The representation is reduced: no prime of S divides `q` and every entry of `x`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SPoint {
    pub numerator: Vec<i64>,
    pub denominator: u64,
}

impl SPoint {
    pub fn new(mut numerator: Vec<i64>, mut denominator: u64, places: &PlaceSet) -> Result<Self> {
        if !places.supports(denominator) {
            return Err(Error::InvalidArgument(format!(
                "denominator {denominator} is not supported on S = {:?}",
                places.finite_primes()
            )));
        }
        for &p in places.finite_primes() {
            while denominator.is_multiple_of(p) && numerator.iter().all(|&x| x % p as i64 == 0) {
                denominator /= p;
                numerator.iter_mut().for_each(|x| *x /= p as i64);
            }
        }
        Ok(SPoint { numerator, denominator })
    }

    /// An integral point (denominator 1).
    pub fn integral(numerator: Vec<i64>) -> Self {
        SPoint { numerator, denominator: 1 }
    }

    pub fn to_rationals(&self) -> Vec<BigRational> {
        let q = BigInt::from(self.denominator);
        self.numerator
            .iter()
            .map(|&x| BigRational::new(BigInt::from(x), q.clone()))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let q = self.denominator as f64;
        self.numerator.iter().map(|&x| x as f64 / q).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.iter().all(|&x| x == 0)
    }

    pub fn numerator_gcd(&self) -> u64 {
        gcd_slice(&self.numerator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn place_set_validation() {
        assert!(PlaceSet::new(vec![2, 2]).is_err());
        assert!(PlaceSet::new(vec![4]).is_err());
        assert!(PlaceSet::new(vec![1]).is_err());
        let s = PlaceSet::new(vec![3, 2]).unwrap();
        assert_eq!(s.finite_primes(), &[2, 3]);
        assert_eq!(s.m_s(), 6);
        assert!(s.includes_infinity());
        assert_eq!(PlaceSet::archimedean().m_s(), 1);
    }

    #[test]
    fn semigroup_membership_and_listing() {
        let s = PlaceSet::new(vec![2, 3]).unwrap();
        assert!(s.in_semigroup(1) && s.in_semigroup(12) && s.in_semigroup(81));
        assert!(!s.in_semigroup(5) && !s.in_semigroup(0) && !s.in_semigroup(-6));
        assert_eq!(s.semigroup_up_to(20), vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]);
        assert_eq!(PlaceSet::archimedean().semigroup_up_to(100), vec![1]);
        assert_eq!(s.exponents(72), Some(vec![(2, 3), (3, 2)]));
        assert_eq!(s.exponents(10), None);
    }

    #[test]
    fn s_points_reduce() {
        let s = PlaceSet::new(vec![2]).unwrap();
        let z = SPoint::new(vec![4, 2, 0, 2], 4, &s).unwrap();
        assert_eq!(z, SPoint { numerator: vec![2, 1, 0, 1], denominator: 2 });
        // 3 is not in S, so it is not cancelled
        let w = SPoint::new(vec![3, 6], 2, &s).unwrap();
        assert_eq!(w.denominator, 2);
        assert!(SPoint::new(vec![1, 1], 3, &s).is_err());
        assert_eq!(z.to_f64(), vec![1.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn json_shape() {
        let s: PlaceSet = serde_json::from_str(r#"{"finite_primes":[3,2]}"#).unwrap();
        assert_eq!(s.finite_primes(), &[2, 3]);
        assert!(serde_json::from_str::<PlaceSet>(r#"{"finite_primes":[6]}"#).is_err());
    }
}
