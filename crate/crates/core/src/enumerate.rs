//! Enumeration of integral, primitive and S-integral points on `V_m` inside
//! sup-norm boxes.
//!
//! Definite quadrics use a Fincke–Pohst style recursion on the `LDL^T` form with
//! interval pruning. Indefinite quadrics, determinants and pfaffians slice on all
//! coordinates but one and solve the remaining univariate equation exactly; every
//! coordinate of these families enters `f` with degree at most two. A full scan of
//! the box is available as an oracle.
//!
//! The outermost coordinate range is split into independent chunks processed in
//! parallel; results are merged and sorted lexicographically, so output never
//! depends on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::arith::{gcd_slice, integer_roots_quadratic};
use crate::error::{Error, Result};
use crate::linalg::ldl_upper;
use crate::places::{PlaceSet, SPoint};
use crate::varieties::{Level, VarietyKind, VarietySpec};

/// Upper limit on the number of box cells a single enumeration may visit.
pub const MAX_WORK: f64 = 2e10;

pub type IntPoint = Vec<i64>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumOptions {
    /// Scan the whole box instead of pruning.
    pub oracle: bool,
}

/// All `x ∈ Z^n` with `f(x) = m` and `|x|_inf <= bound`, in lexicographic order.
pub fn integral_points(spec: &VarietySpec, m: Level, bound: u64) -> Result<Vec<IntPoint>> {
    integral_points_with(spec, m, bound, EnumOptions::default())
}

pub fn integral_points_with(
    spec: &VarietySpec,
    m: Level,
    bound: u64,
    opts: EnumOptions,
) -> Result<Vec<IntPoint>> {
    let bound = i64::try_from(bound).map_err(|_| Error::TooLarge(format!("bound {bound}")))?;
    if opts.oracle {
        return full_scan(spec, m, bound);
    }
    if !spec.level_attainable(m) {
        return Ok(Vec::new());
    }
    match (spec.kind(), spec.definite_sign()) {
        (VarietyKind::Quadric, Some(sign)) => definite_quadric(spec, m, bound, sign),
        (VarietyKind::Quadric, None) => {
            let q = spec.quadric_matrix().unwrap();
            // slice on the coordinate with the largest diagonal entry
            let k = (0..q.len()).rev().max_by_key(|&i| q[i][i].unsigned_abs()).unwrap();
            sliced(spec, m, bound, k)
        }
        _ => sliced(spec, m, bound, spec.ambient_dim() - 1),
    }
}

/// Naive scan of `[-bound, bound]^n`.
pub fn full_scan(spec: &VarietySpec, m: Level, bound: i64) -> Result<Vec<IntPoint>> {
    let n = spec.ambient_dim();
    check_work(bound, n)?;
    let target = m.get() as i128;
    let mut out: Vec<IntPoint> = (-bound..=bound)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut found = Vec::new();
            let mut x = vec![-bound; n];
            x[0] = first;
            loop {
                if spec.evaluate_int(&x) == Some(target) {
                    found.push(x.clone());
                }
                if !advance(&mut x[1..], bound) {
                    break;
                }
            }
            found
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Odometer step over `[-bound, bound]^len`; returns false after the last cell.
fn advance(x: &mut [i64], bound: i64) -> bool {
    for v in x.iter_mut().rev() {
        if *v < bound {
            *v += 1;
            return true;
        }
        *v = -bound;
    }
    false
}

fn check_work(bound: i64, dims: usize) -> Result<()> {
    let cells = (2.0 * bound as f64 + 1.0).powi(dims as i32);
    if cells > MAX_WORK {
        Err(Error::TooLarge(format!(
            "box [-{bound},{bound}]^{dims} has {cells:.3e} cells"
        )))
    } else {
        Ok(())
    }
}

/// Recursive enumeration for definite quadrics.
fn definite_quadric(spec: &VarietySpec, m: Level, bound: i64, sign: i8) -> Result<Vec<IntPoint>> {
    let q: Vec<Vec<i64>> = spec
        .quadric_matrix()
        .unwrap()
        .iter()
        .map(|r| r.iter().map(|&v| v * sign as i64).collect())
        .collect();
    let target = m.get() * sign as i64;
    debug_assert!(target > 0);
    let n = q.len();
    let qf: Vec<Vec<f64>> = q.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let (d, mu) = ldl_upper(&qf).ok_or_else(|| Error::InvalidVariety("LDL failed on definite form".into()))?;
    let ctx = DefiniteCtx { q: &q, d: &d, mu: &mu, target, bound };

    let last = n - 1;
    let (lo, hi) = ctx.range(last, &[], target as f64);
    let mut out: Vec<IntPoint> = (lo..=hi)
        .into_par_iter()
        .flat_map_iter(|v| {
            let mut x = vec![0i64; n];
            x[last] = v;
            let used = d[last] * (v as f64) * (v as f64);
            let mut found = Vec::new();
            ctx.descend(last - 1, &mut x, target as f64 - used, &mut found);
            found
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

struct DefiniteCtx<'a> {
    q: &'a [Vec<i64>],
    d: &'a [f64],
    mu: &'a [Vec<f64>],
    target: i64,
    bound: i64,
}

impl DefiniteCtx<'_> {
    /// Admissible integer range for coordinate `i` given coordinates `i+1..` in `tail`
    /// (indexed from `i+1`) and remaining budget.
    fn range(&self, i: usize, tail: &[i64], budget: f64) -> (i64, i64) {
        let n = self.d.len();
        let mut center = 0.0;
        for (off, j) in (i + 1..n).enumerate() {
            center -= self.mu[i][j] * tail[off] as f64;
        }
        let budget = budget.max(0.0);
        let radius = (budget / self.d[i]).sqrt();
        let slack = 1e-7 * (1.0 + center.abs() + radius);
        let lo = ((center - radius - slack).ceil() as i64).max(-self.bound);
        let hi = ((center + radius + slack).floor() as i64).min(self.bound);
        (lo, hi)
    }

    /// Coordinates above `k` are fixed; enumerate coordinate `k` and below.
    fn descend(&self, k: usize, x: &mut [i64], budget: f64, found: &mut Vec<IntPoint>) {
        if budget < -1e-6 * (1.0 + self.target as f64) {
            return;
        }
        if k == 0 {
            self.solve_first(x, found);
            return;
        }
        let n = x.len();
        let (lo, hi) = self.range(k, &x[k + 1..n], budget);
        for v in lo..=hi {
            x[k] = v;
            let mut s = v as f64;
            for j in k + 1..n {
                s += self.mu[k][j] * x[j] as f64;
            }
            self.descend(k - 1, x, budget - self.d[k] * s * s, found);
        }
        x[k] = 0;
    }

    /// Solve exactly for `x_0` given `x_1..`.
    fn solve_first(&self, x: &mut [i64], found: &mut Vec<IntPoint>) {
        let n = x.len();
        let q = self.q;
        let a = q[0][0] as i128;
        let mut b: i128 = 0;
        for j in 1..n {
            b += q[0][j] as i128 * x[j] as i128;
        }
        b *= 2;
        let mut c: i128 = 0;
        for i in 1..n {
            for j in 1..n {
                c += q[i][j] as i128 * x[i] as i128 * x[j] as i128;
            }
        }
        for t in integer_roots_quadratic(a, b, c - self.target as i128) {
            if t.abs() <= self.bound as i128 {
                x[0] = t as i64;
                found.push(x.to_vec());
            }
        }
        x[0] = 0;
    }
}

/// Slice on every coordinate except `k`; solve for `x_k`.
fn sliced(spec: &VarietySpec, m: Level, bound: i64, k: usize) -> Result<Vec<IntPoint>> {
    let n = spec.ambient_dim();
    check_work(bound, n - 1)?;
    let target = m.get() as i128;
    let others: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    let quadric = spec.quadric_matrix();

    let mut out: Vec<IntPoint> = (-bound..=bound)
        .into_par_iter()
        .map(|first| -> Result<Vec<IntPoint>> {
            let mut found = Vec::new();
            let mut free = vec![-bound; n - 1];
            free[0] = first;
            let mut x = vec![0i64; n];
            loop {
                for (slot, &i) in others.iter().enumerate() {
                    x[i] = free[slot];
                }
                x[k] = 0;
                let (a, b, c) = match quadric {
                    Some(q) => quadric_line(q, &x, k),
                    None => {
                        let wide: Vec<i128> = x.iter().map(|&v| v as i128).collect();
                        spec.line_coefficients_i128(&wide, k).ok_or(Error::Overflow)?
                    }
                };
                if a == 0 && b == 0 {
                    if c == target {
                        for t in -bound..=bound {
                            x[k] = t;
                            found.push(x.clone());
                        }
                    }
                } else {
                    for t in integer_roots_quadratic(a, b, c - target) {
                        if t.abs() <= bound as i128 {
                            x[k] = t as i64;
                            found.push(x.clone());
                        }
                    }
                }
                if !advance(&mut free[1..], bound) {
                    break;
                }
            }
            Ok(found)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// `(a, b, c)` with `f(x + t e_k) = a t^2 + b t + c` for `x_k = 0`.
fn quadric_line(q: &[Vec<i64>], x: &[i64], k: usize) -> (i128, i128, i128) {
    let n = x.len();
    let a = q[k][k] as i128;
    let mut b: i128 = 0;
    let mut c: i128 = 0;
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        let xi = x[i] as i128;
        b += q[k][i] as i128 * xi;
        let mut row: i128 = 0;
        for j in 0..n {
            row += q[i][j] as i128 * x[j] as i128;
        }
        c += row * xi;
    }
    (a, 2 * b, c)
}

/// Keeps the vectors whose entries have gcd 1.
pub fn primitive_filter(points: &[IntPoint]) -> Vec<IntPoint> {
    points.iter().filter(|x| gcd_slice(x) == 1).cloned().collect()
}

pub fn is_primitive(x: &[i64]) -> bool {
    gcd_slice(x) == 1
}

/// Bound on `|f|` over the box `[-bound, bound]^n`.
pub fn max_abs_value(spec: &VarietySpec, bound: u64) -> u128 {
    let b = bound as u128;
    match spec.kind() {
        VarietyKind::Quadric => {
            let s: u128 = spec
                .quadric_matrix()
                .unwrap()
                .iter()
                .flatten()
                .map(|v| v.unsigned_abs() as u128)
                .sum();
            s * b * b
        }
        VarietyKind::DetSym => {
            let n = spec.matrix_size() as u32;
            (1..=n as u128).product::<u128>() * b.pow(n)
        }
        VarietyKind::Pfaffian => {
            let n = spec.matrix_size() as u32;
            let terms: u128 = (1..2 * n as u128).step_by(2).product();
            terms * b.pow(n)
        }
    }
}

/// Primitive `x` with `|x|_inf < bound` (strict) and `f(x) ∈ <S>`, grouped by `f(x)`.
/// Levels without points are omitted.
pub fn s_points_by_level(
    spec: &VarietySpec,
    places: &PlaceSet,
    bound: u64,
) -> Result<BTreeMap<u64, Vec<IntPoint>>> {
    if places.finite_primes().is_empty() {
        return Err(Error::InvalidPlaces("S needs at least one finite prime".into()));
    }
    let mut out = BTreeMap::new();
    if bound <= 1 {
        return Ok(out);
    }
    let inner = bound - 1;
    let max_f = max_abs_value(spec, inner);
    for level in places.semigroup_up_to(max_f) {
        let level = u64::try_from(level).map_err(|_| Error::Overflow)?;
        let m = Level::new(level as i64)?;
        let pts = primitive_filter(&integral_points(spec, m, inner)?);
        if !pts.is_empty() {
            out.insert(level, pts);
        }
    }
    Ok(out)
}

/// Axis-parallel box in `V_1(R)` coordinates.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::InvalidArgument("box corners must be finite with lo <= hi".into()));
        }
        Ok(BoxRegion { lo, hi })
    }

    /// `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> Self {
        BoxRegion { lo: vec![-r; dim], hi: vec![r; dim] }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn sup_radius(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Points `z ∈ V_1 ∩ box` with `p^n z` integral and not divisible by `p`.
///
/// Enumerates `x = p^n z` on `V_{p^{dn}}` inside the scaled box.
pub fn denominator_points(spec: &VarietySpec, p: u64, n: u32, region: &BoxRegion) -> Result<Vec<SPoint>> {
    if region.lo.len() != spec.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: spec.ambient_dim(), got: region.lo.len() });
    }
    let places = PlaceSet::new(vec![p])?;
    let scale = p.checked_pow(n).ok_or(Error::Overflow)?;
    let level = scale
        .checked_pow(spec.degree())
        .and_then(|v| i64::try_from(v).ok())
        .ok_or(Error::Overflow)?;
    let bound = (region.sup_radius() * scale as f64).floor() as u64;
    let pts = integral_points(spec, Level::new(level)?, bound)?;
    let s = scale as f64;
    let mut out = Vec::new();
    for x in pts {
        let inside = x
            .iter()
            .zip(region.lo.iter().zip(&region.hi))
            .all(|(&v, (lo, hi))| lo * s <= v as f64 && v as f64 <= hi * s);
        if !inside || x.iter().all(|&v| v % p as i64 == 0) {
            continue;
        }
        out.push(SPoint::new(x, scale, &places)?);
    }
    debug_assert!(out.iter().all(|z| z.denominator == scale));
    Ok(out)
}
