//! The three level-set families: integral quadratic forms, `±det` on symmetric
//! matrices and `±pf` on skew-symmetric matrices.
//!
//! Every variety lives in an affine coordinate space. Symmetric matrices are
//! flattened to their upper triangle (diagonal included) in row-major order, skew
//! matrices to their strict upper triangle.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::integer_roots_quadratic;
use crate::error::{Error, Result};
use crate::linalg::{det_f64, det_i128, det_rational, min_eigenvalue_spd, pfaffian};

/// Search radius of the screen that backs an anisotropy assertion for ternary forms.
pub const ANISOTROPY_SCREEN_BOUND: i128 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarietyKind {
    Quadric,
    DetSym,
    Pfaffian,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Family {
    Quadric { q: Vec<Vec<i64>>, anisotropic_over_q: bool },
    DetSym { n: usize, sign: i8 },
    Pfaffian { n: usize, sign: i8 },
}

/// A symmetric variety presented as the level sets of an integral polynomial `f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct VarietySpec {
    family: Family,
}

/// A nonzero level `m`, selecting `V_m = {f = m}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Level(i64);

impl Level {
    pub fn new(m: i64) -> Result<Self> {
        if m == 0 {
            Err(Error::ZeroLevel)
        } else {
            Ok(Level(m))
        }
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

impl TryFrom<i64> for Level {
    type Error = Error;
    fn try_from(m: i64) -> Result<Self> {
        Level::new(m)
    }
}

impl From<Level> for i64 {
    fn from(l: Level) -> i64 {
        l.0
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl VarietySpec {
    /// Quadric `f(x) = x^T Q x`. Ternary forms must be anisotropic over Q; definite
    /// ternary forms are anisotropic automatically, indefinite ones need
    /// [`VarietySpec::quadric_anisotropic`].
    pub fn quadric(q: Vec<Vec<i64>>) -> Result<Self> {
        Self::build_quadric(q, false)
    }

    /// Quadric with the caller asserting that `f` does not represent 0 over Q. The
    /// assertion is screened for integer zeros with sup-norm up to
    /// [`ANISOTROPY_SCREEN_BOUND`].
    pub fn quadric_anisotropic(q: Vec<Vec<i64>>) -> Result<Self> {
        Self::build_quadric(q, true)
    }

    /// Diagonal shorthand, e.g. `[1, 1, 1, -1]`.
    pub fn diagonal(coeffs: &[i64]) -> Result<Self> {
        let n = coeffs.len();
        let q = (0..n)
            .map(|i| (0..n).map(|j| if i == j { coeffs[i] } else { 0 }).collect())
            .collect();
        Self::quadric(q)
    }

    pub fn det_sym(n: usize, sign: i8) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidVariety(format!("DetSym needs n >= 3, got {n}")));
        }
        check_sign(sign)?;
        Ok(VarietySpec { family: Family::DetSym { n, sign } })
    }

    /// Pfaffian on `2n x 2n` skew-symmetric matrices.
    pub fn pfaffian(n: usize, sign: i8) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidVariety(format!(
                "Pfaffian needs 2n x 2n matrices with n >= 2, got n = {n}"
            )));
        }
        check_sign(sign)?;
        Ok(VarietySpec { family: Family::Pfaffian { n, sign } })
    }

    fn build_quadric(q: Vec<Vec<i64>>, asserted: bool) -> Result<Self> {
        let n = q.len();
        if n < 3 {
            return Err(Error::InvalidVariety(format!("quadric needs n >= 3 variables, got {n}")));
        }
        if q.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidVariety("quadric matrix is not square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if q[i][j] != q[j][i] {
                    return Err(Error::InvalidVariety(format!(
                        "quadric matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let wide: Vec<Vec<i128>> = q.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
        match det_i128(&wide) {
            Some(0) => return Err(Error::InvalidVariety("quadric is degenerate (det Q = 0)".into())),
            None => return Err(Error::Overflow),
            _ => {}
        }
        let definite = definiteness(&wide).is_some();
        let spec = VarietySpec {
            family: Family::Quadric { q, anisotropic_over_q: definite || asserted },
        };
        if n == 3 && !definite {
            if !asserted {
                return Err(Error::InvalidVariety(
                    "indefinite ternary form: anisotropy over Q must be asserted".into(),
                ));
            }
            if let Some(zero) = spec.find_small_isotropic_vector(ANISOTROPY_SCREEN_BOUND) {
                return Err(Error::InvalidVariety(format!(
                    "form asserted anisotropic but f({zero:?}) = 0"
                )));
            }
        }
        Ok(spec)
    }

    /// Looks for a nonzero integer zero of a ternary form with `|x|_inf <= bound`.
    fn find_small_isotropic_vector(&self, bound: i128) -> Option<[i128; 3]> {
        let Family::Quadric { q, .. } = &self.family else { return None };
        let q = |i: usize, j: usize| q[i][j] as i128;
        // f(x, y, t) = q22 t^2 + 2 (q02 x + q12 y) t + rest(x, y)
        for x in 0..=bound {
            for y in -bound..=bound {
                if x == 0 && y < 0 {
                    continue;
                }
                let a = q(2, 2);
                let b = 2 * (q(0, 2) * x + q(1, 2) * y);
                let c = q(0, 0) * x * x + 2 * q(0, 1) * x * y + q(1, 1) * y * y;
                if a == 0 && b == 0 && c == 0 {
                    return Some([x, y, 1]);
                }
                for t in integer_roots_quadratic(a, b, c) {
                    if t.abs() <= bound && (x, y, t) != (0, 0, 0) {
                        return Some([x, y, t]);
                    }
                }
            }
        }
        None
    }

    pub fn kind(&self) -> VarietyKind {
        match self.family {
            Family::Quadric { .. } => VarietyKind::Quadric,
            Family::DetSym { .. } => VarietyKind::DetSym,
            Family::Pfaffian { .. } => VarietyKind::Pfaffian,
        }
    }

    /// The Gram matrix of a quadric.
    pub fn quadric_matrix(&self) -> Option<&[Vec<i64>]> {
        match &self.family {
            Family::Quadric { q, .. } => Some(q),
            _ => None,
        }
    }

    /// `n` for quadrics and DetSym, half the matrix size for pfaffians.
    pub fn matrix_size(&self) -> usize {
        match &self.family {
            Family::Quadric { q, .. } => q.len(),
            Family::DetSym { n, .. } | Family::Pfaffian { n, .. } => *n,
        }
    }

    pub fn sign(&self) -> i8 {
        match &self.family {
            Family::Quadric { .. } => 1,
            Family::DetSym { sign, .. } | Family::Pfaffian { sign, .. } => *sign,
        }
    }

    pub fn anisotropic_over_q(&self) -> bool {
        matches!(self.family, Family::Quadric { anisotropic_over_q: true, .. })
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.family {
            Family::Quadric { q, .. } => q.len(),
            Family::DetSym { n, .. } => n * (n + 1) / 2,
            Family::Pfaffian { n, .. } => n * (2 * n - 1),
        }
    }

    pub fn degree(&self) -> u32 {
        match &self.family {
            Family::Quadric { .. } => 2,
            Family::DetSym { n, .. } | Family::Pfaffian { n, .. } => *n as u32,
        }
    }

    /// `Some(+1)` / `Some(-1)` for positive / negative definite quadrics.
    pub fn definite_sign(&self) -> Option<i8> {
        match &self.family {
            Family::Quadric { q, .. } => {
                let wide: Vec<Vec<i128>> =
                    q.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
                definiteness(&wide)
            }
            _ => None,
        }
    }

    /// Whether `f = m` can have real solutions. Only quadric signs are analysed;
    /// determinants and pfaffians take both signs.
    pub fn level_attainable(&self, m: Level) -> bool {
        match self.definite_sign() {
            Some(s) => (s as i64) * m.get() > 0,
            None => true,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        let expected = self.ambient_dim();
        if len != expected {
            Err(Error::DimensionMismatch { expected, got: len })
        } else {
            Ok(())
        }
    }

    /// Exact value of `f` at a rational point.
    pub fn evaluate(&self, x: &[BigRational]) -> Result<BigRational> {
        self.check_dim(x.len())?;
        Ok(match &self.family {
            Family::Quadric { q, .. } => {
                let mut acc = BigRational::zero();
                for i in 0..x.len() {
                    if x[i].is_zero() {
                        continue;
                    }
                    let mut row = BigRational::zero();
                    for j in 0..x.len() {
                        if q[i][j] != 0 {
                            row += &x[j] * BigRational::from_integer(BigInt::from(q[i][j]));
                        }
                    }
                    acc += &x[i] * row;
                }
                acc
            }
            Family::DetSym { n, sign } => {
                let d = det_rational(&sym_matrix(x, *n));
                if *sign < 0 {
                    -d
                } else {
                    d
                }
            }
            Family::Pfaffian { n, sign } => {
                let a = skew_matrix(x, 2 * n);
                let pf: BigRational = pfaffian(&a);
                debug_assert_eq!(&pf * &pf, det_rational(&a), "pf^2 != det");
                if *sign < 0 {
                    -pf
                } else {
                    pf
                }
            }
        })
    }

    /// Exact value of `f` at an integer point; `None` on `i128` overflow.
    pub fn evaluate_int(&self, x: &[i64]) -> Option<i128> {
        debug_assert_eq!(x.len(), self.ambient_dim());
        match &self.family {
            Family::Quadric { q, .. } => {
                let mut acc: i128 = 0;
                for i in 0..x.len() {
                    if x[i] == 0 {
                        continue;
                    }
                    let mut row: i128 = 0;
                    for j in 0..x.len() {
                        row += q[i][j] as i128 * x[j] as i128;
                    }
                    acc = acc.checked_add(row.checked_mul(x[i] as i128)?)?;
                }
                Some(acc)
            }
            _ => {
                let wide: Vec<i128> = x.iter().map(|&v| v as i128).collect();
                self.evaluate_i128(&wide)
            }
        }
    }

    pub fn evaluate_i128(&self, x: &[i128]) -> Option<i128> {
        debug_assert_eq!(x.len(), self.ambient_dim());
        match &self.family {
            Family::Quadric { q, .. } => {
                let mut acc: i128 = 0;
                for i in 0..x.len() {
                    let mut row: i128 = 0;
                    for j in 0..x.len() {
                        row = row.checked_add((q[i][j] as i128).checked_mul(x[j])?)?;
                    }
                    acc = acc.checked_add(row.checked_mul(x[i])?)?;
                }
                Some(acc)
            }
            Family::DetSym { n, sign } => {
                det_i128(&sym_matrix(x, *n)).and_then(|d| d.checked_mul(*sign as i128))
            }
            Family::Pfaffian { n, sign } => {
                // entries are small at the sizes enumerated here; the recursion itself
                // is unchecked, so bound the inputs first
                let max = x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                let terms = double_factorial(2 * n - 1);
                let limit = (i128::MAX as f64) / terms as f64;
                if (max as f64).powi(*n as i32) >= limit {
                    return None;
                }
                let pf: i128 = pfaffian(&skew_matrix(x, 2 * n));
                Some(pf * *sign as i128)
            }
        }
    }

    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.ambient_dim());
        match &self.family {
            Family::Quadric { q, .. } => {
                let mut acc = 0.0;
                for i in 0..x.len() {
                    let mut row = 0.0;
                    for j in 0..x.len() {
                        row += q[i][j] as f64 * x[j];
                    }
                    acc += row * x[i];
                }
                acc
            }
            Family::DetSym { n, sign } => *sign as f64 * det_f64(&sym_matrix(x, *n)),
            Family::Pfaffian { n, sign } => *sign as f64 * pfaffian(&skew_matrix(x, 2 * n)),
        }
    }

    /// Real gradient of `f`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(match &self.family {
            Family::Quadric { q, .. } => (0..x.len())
                .map(|i| 2.0 * (0..x.len()).map(|j| q[i][j] as f64 * x[j]).sum::<f64>())
                .collect(),
            _ => (0..x.len())
                .map(|k| {
                    let (_, b, _) = self.line_coefficients_f64(x, k);
                    b
                })
                .collect(),
        })
    }

    /// Integer gradient at an integer point; `None` on overflow.
    pub fn gradient_i128(&self, x: &[i128]) -> Option<Vec<i128>> {
        match &self.family {
            Family::Quadric { q, .. } => (0..x.len())
                .map(|i| {
                    let mut s: i128 = 0;
                    for j in 0..x.len() {
                        s = s.checked_add((q[i][j] as i128).checked_mul(x[j])?)?;
                    }
                    s.checked_mul(2)
                })
                .collect(),
            _ => (0..x.len())
                .map(|k| self.line_coefficients_i128(x, k).map(|(_, b, _)| b))
                .collect(),
        }
    }

    /// Coefficients `(a, b, c)` of `t -> f(x with x_k := x_k + t) = a t^2 + b t + c`.
    ///
    /// Every coordinate of the three families enters `f` with degree at most two
    /// (a symmetric off-diagonal entry appears twice in the matrix, every other
    /// entry once), so three evaluations determine the restriction exactly.
    pub fn line_coefficients_f64(&self, x: &[f64], k: usize) -> (f64, f64, f64) {
        if let Family::Quadric { q, .. } = &self.family {
            let a = q[k][k] as f64;
            let cross: f64 = (0..x.len()).map(|j| q[k][j] as f64 * x[j]).sum();
            let b = 2.0 * cross;
            let c = self.evaluate_f64(x);
            return (a, b, c);
        }
        let mut y = x.to_vec();
        let c = self.evaluate_f64(&y);
        y[k] = x[k] + 1.0;
        let plus = self.evaluate_f64(&y);
        y[k] = x[k] - 1.0;
        let minus = self.evaluate_f64(&y);
        ((plus + minus) / 2.0 - c, (plus - minus) / 2.0, c)
    }

    /// Integer version of [`VarietySpec::line_coefficients_f64`].
    pub fn line_coefficients_i128(&self, x: &[i128], k: usize) -> Option<(i128, i128, i128)> {
        let mut y = x.to_vec();
        let c = self.evaluate_i128(&y)?;
        y[k] = x[k].checked_add(1)?;
        let plus = self.evaluate_i128(&y)?;
        y[k] = x[k].checked_sub(1)?;
        let minus = self.evaluate_i128(&y)?;
        let two_a = plus.checked_add(minus)?.checked_sub(c.checked_mul(2)?)?;
        let two_b = plus.checked_sub(minus)?;
        debug_assert!(two_a % 2 == 0 && two_b % 2 == 0);
        Some((two_a / 2, two_b / 2, c))
    }

    /// Real scalar `c` with `f(c x) = 1` whenever `f(x) = m`, i.e. `c = m^{-1/d}`.
    pub fn projection_scale(&self, m: Level) -> Result<f64> {
        let d = self.degree();
        let mv = m.get() as f64;
        if mv > 0.0 {
            Ok(mv.powf(-1.0 / d as f64))
        } else if d % 2 == 1 {
            Ok(-(-mv).powf(-1.0 / d as f64))
        } else {
            Err(Error::NoRealRoot { level: m.get(), degree: d })
        }
    }

    /// Radial projection `V_m -> V_1`, `x -> m^{-1/d} x`.
    pub fn radial_project(&self, m: Level, x: &[BigRational]) -> Result<Vec<f64>> {
        let value = self.evaluate(x)?;
        if value != BigRational::from_integer(BigInt::from(m.get())) {
            return Err(Error::NotOnLevel { level: m.get() });
        }
        let scale = self.projection_scale(m)?;
        let z: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN) * scale).collect();
        debug_assert!(
            (self.evaluate_f64(&z) - 1.0).abs() < 1e-9 * (1.0 + norm_sq(&z).powf(self.degree() as f64 / 2.0)),
            "projection left V_1"
        );
        Ok(z)
    }

    /// [`VarietySpec::radial_project`] for integer points known to lie on `V_m`.
    pub fn radial_project_int(&self, m: Level, x: &[i64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        if self.evaluate_int(x) != Some(m.get() as i128) {
            return Err(Error::NotOnLevel { level: m.get() });
        }
        let scale = self.projection_scale(m)?;
        Ok(x.iter().map(|&v| v as f64 * scale).collect())
    }

    /// A lower bound for `|x|` over the real points of `V_m`.
    pub fn min_norm_bound(&self, m: Level) -> f64 {
        let mv = (m.get() as f64).abs();
        match &self.family {
            // |x^T Q x| <= |Q|_F |x|^2
            Family::Quadric { q, .. } => {
                let frob = q.iter().flatten().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
                (mv / frob).sqrt()
            }
            // Hadamard: |det X| <= |X|_F^n with |X|_F^2 <= 2|x|^2, and |pf| <= |A|_F^n likewise
            Family::DetSym { n, .. } | Family::Pfaffian { n, .. } => mv.powf(1.0 / *n as f64) / 2f64.sqrt(),
        }
    }

    /// Largest euclidean norm on the compact unit level set `V_{±1}` of a definite quadric.
    pub fn compact_radius(&self) -> Option<f64> {
        let sign = self.definite_sign()? as f64;
        let q: Vec<Vec<f64>> = self
            .quadric_matrix()?
            .iter()
            .map(|r| r.iter().map(|&v| sign * v as f64).collect())
            .collect();
        Some(1.0 / min_eigenvalue_spd(&q)?.sqrt())
    }
}

fn check_sign(sign: i8) -> Result<()> {
    if sign == 1 || sign == -1 {
        Ok(())
    } else {
        Err(Error::InvalidVariety(format!("sign must be +1 or -1, got {sign}")))
    }
}

fn double_factorial(k: usize) -> u128 {
    (1..=k).rev().step_by(2).map(|v| v as u128).product()
}

fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// Sylvester's criterion on leading principal minors.
fn definiteness(q: &[Vec<i128>]) -> Option<i8> {
    let n = q.len();
    let minors: Option<Vec<i128>> = (1..=n)
        .map(|k| {
            let sub: Vec<Vec<i128>> = q[..k].iter().map(|r| r[..k].to_vec()).collect();
            det_i128(&sub)
        })
        .collect();
    let minors = minors?;
    if minors.iter().all(|&d| d > 0) {
        return Some(1);
    }
    let alternating = minors
        .iter()
        .enumerate()
        .all(|(k, &d)| if k % 2 == 0 { d < 0 } else { d > 0 });
    alternating.then_some(-1)
}

/// Symmetric `n x n` matrix from its upper-triangle coordinates.
pub fn sym_matrix<T: Clone + Zero>(x: &[T], n: usize) -> Vec<Vec<T>> {
    let mut a = vec![vec![T::zero(); n]; n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            a[i][j] = x[k].clone();
            a[j][i] = x[k].clone();
            k += 1;
        }
    }
    a
}

/// Skew-symmetric `size x size` matrix from its strict upper-triangle coordinates.
pub fn skew_matrix<T>(x: &[T], size: usize) -> Vec<Vec<T>>
where
    T: Clone + Zero + std::ops::Neg<Output = T>,
{
    let mut a = vec![vec![T::zero(); size]; size];
    let mut k = 0;
    for i in 0..size {
        for j in i + 1..size {
            a[i][j] = x[k].clone();
            a[j][i] = -x[k].clone();
            k += 1;
        }
    }
    a
}

/// Wire form: `{"kind": ..., "Q": [[...]], "n": ..., "sign": ...}`.
#[derive(Serialize, Deserialize)]
struct RawSpec {
    kind: VarietyKind,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sign: Option<i8>,
    #[serde(rename = "anisotropic_over_Q", default, skip_serializing_if = "Option::is_none")]
    anisotropic_over_q: Option<bool>,
}

impl TryFrom<RawSpec> for VarietySpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        match raw.kind {
            VarietyKind::Quadric => {
                let q = raw
                    .q
                    .ok_or_else(|| Error::InvalidVariety("Quadric needs \"Q\"".into()))?;
                if raw.anisotropic_over_q.unwrap_or(false) {
                    VarietySpec::quadric_anisotropic(q)
                } else {
                    VarietySpec::quadric(q)
                }
            }
            VarietyKind::DetSym | VarietyKind::Pfaffian => {
                let n = raw
                    .n
                    .ok_or_else(|| Error::InvalidVariety(format!("{:?} needs \"n\"", raw.kind)))?;
                let sign = raw.sign.unwrap_or(1);
                if raw.kind == VarietyKind::DetSym {
                    VarietySpec::det_sym(n, sign)
                } else {
                    VarietySpec::pfaffian(n, sign)
                }
            }
        }
    }
}

impl From<VarietySpec> for RawSpec {
    fn from(spec: VarietySpec) -> RawSpec {
        match spec.family {
            Family::Quadric { q, anisotropic_over_q } => RawSpec {
                kind: VarietyKind::Quadric,
                n: Some(q.len()),
                q: Some(q),
                sign: None,
                anisotropic_over_q: Some(anisotropic_over_q),
            },
            Family::DetSym { n, sign } => RawSpec {
                kind: VarietyKind::DetSym,
                q: None,
                n: Some(n),
                sign: Some(sign),
                anisotropic_over_q: None,
            },
            Family::Pfaffian { n, sign } => RawSpec {
                kind: VarietyKind::Pfaffian,
                q: None,
                n: Some(n),
                sign: Some(sign),
                anisotropic_over_q: None,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::parse_rational;
    use proptest::prelude::*;

    fn rat(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
    }

    fn sum3() -> VarietySpec {
        VarietySpec::diagonal(&[1, 1, 1]).unwrap()
    }

    fn central_difference(spec: &VarietySpec, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[k] += h;
                m[k] -= h;
                (spec.evaluate_f64(&p) - spec.evaluate_f64(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn norm_bounds() {
        assert!((sum3().compact_radius().unwrap() - 1.0).abs() < 1e-12);
        let ell = VarietySpec::diagonal(&[1, 4, 9]).unwrap();
        assert!((ell.compact_radius().unwrap() - 1.0).abs() < 1e-12);
        let thin = VarietySpec::diagonal(&[4, 4, 1]).unwrap();
        assert!((thin.compact_radius().unwrap() - 1.0).abs() < 1e-12);
        assert!((VarietySpec::diagonal(&[4, 9, 16]).unwrap().compact_radius().unwrap() - 0.5).abs() < 1e-12);
        assert!(VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap().compact_radius().is_none());
        // (1,0,0,0) lies on x^2+y^2+z^2-w^2 = 1
        let h = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        assert!(h.min_norm_bound(Level::new(1).unwrap()) <= 1.0);
        let det = VarietySpec::det_sym(3, 1).unwrap();
        assert!(det.min_norm_bound(Level::new(1).unwrap()) <= 3f64.sqrt());
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(sum3().evaluate(&rat(&[1, 2, 0])).unwrap(), BigRational::from_integer(5.into()));
        let det = VarietySpec::det_sym(3, 1).unwrap();
        // identity in upper-triangle coordinates (a11 a12 a13 a22 a23 a33)
        assert_eq!(det.evaluate(&rat(&[1, 0, 0, 1, 0, 1])).unwrap(), BigRational::from_integer(1.into()));
        let pf = VarietySpec::pfaffian(2, 1).unwrap();
        // block-diagonal symplectic form: a12 = a34 = 1
        assert_eq!(pf.evaluate(&rat(&[1, 0, 0, 0, 0, 1])).unwrap(), BigRational::from_integer(1.into()));
        let neg = VarietySpec::pfaffian(2, -1).unwrap();
        assert_eq!(neg.evaluate(&rat(&[1, 0, 0, 0, 0, 1])).unwrap(), BigRational::from_integer((-1).into()));
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        assert_eq!(
            sum3().evaluate(&rat(&[1, 2])),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        );
        assert!(sum3().gradient(&[1.0]).is_err());
    }

    #[test]
    fn evaluate_rational_point() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let z: Vec<BigRational> = ["1", "1/2", "0", "1/2"].iter().map(|s| parse_rational(s).unwrap()).collect();
        assert_eq!(f.evaluate(&z).unwrap(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(sum3().gradient(&[1.0, 2.0, 0.0]).unwrap(), vec![2.0, 4.0, 0.0]);
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        assert_eq!(f.gradient(&[0.0, 0.0, 0.0, 1.0]).unwrap(), vec![0.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn det_gradient_matches_finite_differences_at_identity() {
        let det = VarietySpec::det_sym(3, 1).unwrap();
        let x = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let g = det.gradient(&x).unwrap();
        let fd = central_difference(&det, &x, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8, "{g:?} vs {fd:?}");
        }
        // d det / d a_ii = 1 at the identity, off-diagonal partials vanish
        assert_eq!(g, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn radial_projection_examples() {
        let f = sum3();
        let z = f.radial_project(Level::new(4).unwrap(), &rat(&[0, 0, 2])).unwrap();
        assert_eq!(z, vec![0.0, 0.0, 1.0]);
        let z = f.radial_project(Level::new(1).unwrap(), &rat(&[1, 0, 0])).unwrap();
        assert_eq!(z, vec![1.0, 0.0, 0.0]);
        let z = f.radial_project(Level::new(5).unwrap(), &rat(&[0, 1, 2])).unwrap();
        let s5 = 5f64.sqrt();
        assert!((z[1] - 1.0 / s5).abs() < 1e-15 && (z[2] - 2.0 / s5).abs() < 1e-15);
        assert!((f.evaluate_f64(&z) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_projection_errors() {
        let f = sum3();
        assert_eq!(
            f.radial_project(Level::new(4).unwrap(), &rat(&[1, 0, 0])),
            Err(Error::NotOnLevel { level: 4 })
        );
        let g = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        assert!(matches!(
            g.radial_project(Level::new(-1).unwrap(), &rat(&[0, 0, 0, 1])),
            Err(Error::NoRealRoot { .. })
        ));
        // odd degree: negative levels have a real root
        let det = VarietySpec::det_sym(3, 1).unwrap();
        let z = det.radial_project(Level::new(-8).unwrap(), &rat(&[-2, 0, 0, 2, 0, 2])).unwrap();
        assert!((det.evaluate_f64(&z) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_level_rejected() {
        assert_eq!(Level::new(0), Err(Error::ZeroLevel));
        assert!(serde_json::from_str::<Level>("0").is_err());
    }

    #[test]
    fn validation() {
        assert!(VarietySpec::diagonal(&[1, 1]).is_err());
        assert!(VarietySpec::diagonal(&[1, 0, 1]).is_err());
        assert!(VarietySpec::quadric(vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]).is_err());
        assert!(VarietySpec::det_sym(2, 1).is_err());
        assert!(VarietySpec::pfaffian(1, 1).is_err());
        assert!(VarietySpec::det_sym(3, 2).is_err());
        // indefinite ternary forms need the anisotropy assertion
        assert!(VarietySpec::diagonal(&[1, 1, -3]).is_err());
        let f = VarietySpec::quadric_anisotropic(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -3]]).unwrap();
        assert!(f.anisotropic_over_q());
        // x^2 + y^2 - 2 z^2 has the zero (1, 1, 1)
        let bad = VarietySpec::quadric_anisotropic(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, -2]]);
        assert!(matches!(bad, Err(Error::InvalidVariety(_))));
        // definite ternary forms need no assertion
        assert!(sum3().anisotropic_over_q());
        assert!(VarietySpec::diagonal(&[1, 1, 1, -1]).is_ok());
    }

    #[test]
    fn level_sign_analysis() {
        let f = sum3();
        assert!(f.level_attainable(Level::new(3).unwrap()));
        assert!(!f.level_attainable(Level::new(-3).unwrap()));
        let neg = VarietySpec::diagonal(&[-1, -2, -1]).unwrap();
        assert_eq!(neg.definite_sign(), Some(-1));
        assert!(neg.level_attainable(Level::new(-3).unwrap()));
        let g = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        assert!(g.level_attainable(Level::new(-3).unwrap()));
    }

    #[test]
    fn dimensions_and_degrees() {
        let det = VarietySpec::det_sym(4, -1).unwrap();
        assert_eq!((det.ambient_dim(), det.degree()), (10, 4));
        let pf = VarietySpec::pfaffian(3, 1).unwrap();
        assert_eq!((pf.ambient_dim(), pf.degree()), (15, 3));
    }

    #[test]
    fn json_round_trip() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"kind\":\"Quadric\"") && s.contains("\"Q\""));
        assert_eq!(serde_json::from_str::<VarietySpec>(&s).unwrap(), f);
        let det: VarietySpec = serde_json::from_str(r#"{"kind":"DetSym","n":3,"sign":-1}"#).unwrap();
        assert_eq!((det.kind(), det.sign()), (VarietyKind::DetSym, -1));
        assert!(serde_json::from_str::<VarietySpec>(r#"{"kind":"Pfaffian","n":1}"#).is_err());
        assert!(serde_json::from_str::<VarietySpec>(r#"{"kind":"Quadric"}"#).is_err());
    }

    fn specs() -> Vec<VarietySpec> {
        vec![
            sum3(),
            VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap(),
            VarietySpec::quadric(vec![vec![2, 1, 0, 0], vec![1, 3, -1, 0], vec![0, -1, -2, 1], vec![0, 0, 1, 1]])
                .unwrap(),
            VarietySpec::det_sym(3, 1).unwrap(),
            VarietySpec::det_sym(4, -1).unwrap(),
            VarietySpec::pfaffian(2, 1).unwrap(),
            VarietySpec::pfaffian(3, -1).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn homogeneity(seed in proptest::collection::vec(-6i64..=6, 15), lambda in -5i64..=5) {
            prop_assume!(lambda != 0);
            for spec in specs() {
                let x = &seed[..spec.ambient_dim()];
                let scaled: Vec<i64> = x.iter().map(|v| v * lambda).collect();
                let fx = spec.evaluate(&rat(x)).unwrap();
                let fl = spec.evaluate(&rat(&scaled)).unwrap();
                let factor = BigRational::from_integer(BigInt::from(lambda).pow(spec.degree()));
                prop_assert_eq!(fl, fx * factor);
                let li = (lambda as i128).pow(spec.degree());
                prop_assert_eq!(spec.evaluate_int(&scaled), spec.evaluate_int(x).map(|v| v * li));
            }
        }

        #[test]
        fn exact_and_integer_paths_agree(seed in proptest::collection::vec(-9i64..=9, 15)) {
            for spec in specs() {
                let x = &seed[..spec.ambient_dim()];
                let exact = spec.evaluate(&rat(x)).unwrap();
                prop_assert_eq!(exact, BigRational::from_integer(spec.evaluate_int(x).unwrap().into()));
            }
        }

        #[test]
        fn pfaffian_squares_to_det(u4 in proptest::collection::vec(-9i128..=9, 6), u6 in proptest::collection::vec(-9i128..=9, 15)) {
            for (u, size) in [(&u4, 4usize), (&u6, 6)] {
                let a = skew_matrix(u, size);
                let pf: i128 = pfaffian(&a);
                prop_assert_eq!(pf * pf, det_i128(&a).unwrap());
            }
        }

        #[test]
        fn gradient_matches_finite_differences(seed in proptest::collection::vec(-3.0f64..3.0, 15)) {
            for spec in specs() {
                let x = &seed[..spec.ambient_dim()];
                let g = spec.gradient(x).unwrap();
                let fd = central_difference(&spec, x, 1e-5);
                let scale = g.iter().map(|v| v.abs()).fold(1e-3, f64::max);
                for (a, b) in g.iter().zip(&fd) {
                    prop_assert!((a - b).abs() <= 1e-6 * scale, "{:?} vs {:?}", g, fd);
                }
            }
        }

        #[test]
        fn projection_lands_on_unit_level(seed in proptest::collection::vec(-20i64..=20, 15)) {
            for spec in specs() {
                let x = &seed[..spec.ambient_dim()];
                let Some(v) = spec.evaluate_int(x) else { continue };
                if v == 0 || (v < 0 && spec.degree() % 2 == 0) {
                    continue;
                }
                let m = Level::new(v as i64).unwrap();
                let z = spec.radial_project_int(m, x).unwrap();
                prop_assert!((spec.evaluate_f64(&z) - 1.0).abs() < 1e-9);
            }
        }
    }
}
