//! Determinants and pfaffians over exact and floating-point scalars.

use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Pfaffian by recursive expansion along the first row.
///
/// Only the strict upper triangle of `a` is read. Cost is `(2n-1)!!` terms, which is
/// fine for the matrix sizes handled here (2n <= 10).
pub fn pfaffian<T>(a: &[Vec<T>]) -> T
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    let idx: Vec<usize> = (0..a.len()).collect();
    pfaffian_rec(a, &idx)
}

fn pfaffian_rec<T>(a: &[Vec<T>], idx: &[usize]) -> T
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    if idx.is_empty() {
        return T::one();
    }
    if idx.len() % 2 == 1 {
        return T::zero();
    }
    let first = idx[0];
    let mut acc = T::zero();
    let mut rest = Vec::with_capacity(idx.len() - 2);
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        let entry = a[first][j].clone();
        if entry.is_zero() {
            continue;
        }
        rest.clear();
        rest.extend(idx[1..].iter().copied().filter(|&k| k != j));
        let term = entry * pfaffian_rec(a, &rest);
        if pos % 2 == 1 {
            acc = acc + term;
        } else {
            acc = acc - term;
        }
    }
    acc
}

/// Exact determinant over the rationals (Gaussian elimination).
pub fn det_rational(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Exact determinant of an integer matrix by fraction-free (Bareiss) elimination.
/// Returns `None` on `i128` overflow.
pub fn det_i128(a: &[Vec<i128>]) -> Option<i128> {
    let n = a.len();
    if n == 0 {
        return Some(1);
    }
    let mut m = a.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(piv) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return Some(0);
            };
            m.swap(piv, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i][j]
                    .checked_mul(m[k][k])?
                    .checked_sub(m[i][k].checked_mul(m[k][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = m[k][k];
    }
    m[n - 1][n - 1].checked_mul(sign)
}

/// Floating-point determinant with partial pivoting.
pub fn det_f64(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let pivot = m[col][col];
        det *= pivot;
        for r in col + 1..n {
            let factor = m[r][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    det
}

/// `L D L^T` factorisation of a symmetric positive-definite matrix, returned as
/// diagonal `d` and unit upper factor `mu` so that
/// `x^T Q x = sum_i d_i (x_i + sum_{j>i} mu[i][j] x_j)^2`.
pub fn ldl_upper(q: &[Vec<f64>]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = q.len();
    let mut d = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    // the last term involves x_{n-1} alone, so enumeration fixes it first
    let mut a: Vec<Vec<f64>> = q.to_vec();
    for i in 0..n {
        if a[i][i] <= 0.0 {
            return None;
        }
        d[i] = a[i][i];
        for j in i + 1..n {
            mu[i][j] = a[i][j] / a[i][i];
        }
        for r in i + 1..n {
            for c in i + 1..n {
                a[r][c] -= a[i][r] * a[i][c] / d[i];
            }
        }
    }
    Some((d, mu))
}

/// Smallest eigenvalue of a symmetric positive-definite matrix, by bisection on
/// the definiteness of `Q - λI`. `None` if `Q` is not positive definite.
pub fn min_eigenvalue_spd(q: &[Vec<f64>]) -> Option<f64> {
    let shifted = |lambda: f64| -> Vec<Vec<f64>> {
        let mut a = q.to_vec();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] -= lambda;
        }
        a
    };
    ldl_upper(q)?;
    let mut lo = 0.0;
    let mut hi = (0..q.len()).map(|i| q[i][i]).fold(f64::INFINITY, f64::min);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ldl_upper(&shifted(mid)).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(lo)
}
