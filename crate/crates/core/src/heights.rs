//! Local norms and the S-height `H_S(z) = prod_{v in S} |z|_v`.
//!
//! Finite places use the p-adic max norm, which is always an exact power of `p`.
//! The archimedean place uses a euclidean norm `sqrt(z^T G z)`. A height is kept as
//! an exact rational times one square root so that comparisons against rational
//! thresholds stay exact.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, rational_to_f64, valuation_rational};
use crate::error::{Error, Result};
use crate::linalg::det_rational;
use crate::places::{PlaceSet, SPoint};

/// Places plus the euclidean structure used at infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub places: PlaceSet,
    /// Gram matrix of the archimedean norm; `None` means the standard one.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "gram_serde")]
    gram: Option<Vec<Vec<BigRational>>>,
}

impl HeightProfile {
    pub fn new(places: PlaceSet) -> Self {
        HeightProfile { places, gram: None }
    }

    pub fn with_gram(places: PlaceSet, gram: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = gram.len();
        if gram.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("Gram matrix is not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::InvalidArgument("Gram matrix is not symmetric".into()));
                }
            }
        }
        for k in 1..=n {
            let minor: Vec<Vec<BigRational>> = gram[..k].iter().map(|r| r[..k].to_vec()).collect();
            if !det_rational(&minor).is_positive() {
                return Err(Error::InvalidArgument("Gram matrix is not positive definite".into()));
            }
        }
        Ok(HeightProfile { places, gram: Some(gram) })
    }

    pub fn gram(&self) -> Option<&[Vec<BigRational>]> {
        self.gram.as_deref()
    }

    /// `z^T G z`, exactly.
    pub fn squared_euclidean(&self, z: &[BigRational]) -> Result<BigRational> {
        match &self.gram {
            None => Ok(z.iter().map(|v| v * v).sum()),
            Some(g) => {
                if g.len() != z.len() {
                    return Err(Error::DimensionMismatch { expected: g.len(), got: z.len() });
                }
                let mut acc = BigRational::zero();
                for i in 0..z.len() {
                    for j in 0..z.len() {
                        acc += &g[i][j] * &z[i] * &z[j];
                    }
                }
                Ok(acc)
            }
        }
    }
}

/// A height value `scale * sqrt(radicand)` with exact rational parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Height {
    pub scale: BigRational,
    pub radicand: BigRational,
}

impl Height {
    /// `H^2 = scale^2 * radicand`, exactly.
    pub fn squared(&self) -> BigRational {
        &self.scale * &self.scale * &self.radicand
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.squared()).sqrt()
    }

    /// Exact comparison against a rational threshold `t >= 0`.
    pub fn cmp_threshold(&self, t: &BigRational) -> Ordering {
        self.squared().cmp(&(t * t))
    }

    pub fn less_than(&self, t: &BigRational) -> bool {
        self.cmp_threshold(t) == Ordering::Less
    }
}

/// Exponent `e` with `|z|_p = p^e = max_i |z_i|_p`.
pub fn padic_norm(z: &[BigRational], p: u64) -> Result<i64> {
    z.iter()
        .filter(|v| !v.is_zero())
        .map(|v| -valuation_rational(v, p))
        .max()
        .ok_or(Error::ZeroVector)
}

/// Height of a rational vector.
pub fn height(z: &[BigRational], profile: &HeightProfile) -> Result<Height> {
    if z.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    let mut scale = BigRational::from_integer(BigInt::from(1));
    for &p in profile.places.finite_primes() {
        scale *= big_pow(p, padic_norm(z, p)?);
    }
    Ok(Height { scale, radicand: profile.squared_euclidean(z)? })
}

pub fn height_spoint(z: &SPoint, profile: &HeightProfile) -> Result<Height> {
    height(&z.to_rationals(), profile)
}

/// Standard euclidean norm of an integer vector.
pub fn euclidean_norm_int(x: &[i64]) -> f64 {
    x.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
}

mod gram_serde {
    use crate::arith::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(g: &Option<Vec<Vec<BigRational>>>, s: S) -> Result<S::Ok, S::Error> {
        g.as_ref()
            .map(|rows| {
                rows.iter()
                    .map(|r| r.iter().map(format_rational).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<BigRational>>>, D::Error> {
        let raw = Option::<Vec<Vec<String>>>::deserialize(d)?;
        raw.map(|rows| {
            rows.iter()
                .map(|r| r.iter().map(|s| parse_rational(s).map_err(D::Error::custom)).collect())
                .collect()
        })
        .transpose()
    }
}
