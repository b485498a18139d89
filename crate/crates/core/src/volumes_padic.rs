//! Exact p-adic volumes of level sets, spheres and balls.
//!
//! Volumes use the Gelfand–Leray normalization: the measure of `{f = m}` inside
//! `Z_p^n` is `lim_k #{x mod p^k : f(x) ≡ m} / p^{k(n-1)}`. Counting is a DFS over
//! p-adic digits. A residue class `x mod p^j` whose gradient valuation `e` is below
//! `j` is resolved in closed form by Hensel's lemma, so only the (rare) singular
//! classes are expanded digit by digit.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{big_pow, format_rational, is_prime, rational_to_f64, valuation_i128};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, AsymptoticFit, MAX_LOG_POWER};
use crate::places::PlaceSet;
use crate::varieties::{Level, VarietySpec};

/// Upper bound on visited residue classes per count.
pub const MAX_NODES: u64 = 50_000_000;

/// Default precision: 6 digits for `p <= 5`, 4 otherwise.
pub fn default_k_max(p: u64) -> u32 {
    if p <= 5 {
        6
    } else {
        4
    }
}

/// A local density with its stabilization witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub p: u64,
    /// First `k` with `density_k == density_{k+1}` (or `k_max` if none).
    pub k: u32,
    /// Solutions mod `p^k`.
    #[serde(with = "biguint_string")]
    pub count: BigUint,
    /// `count / p^{k(n-1)}`.
    #[serde(with = "crate::arith::serde_rational")]
    pub density: BigRational,
    pub stabilized: bool,
    /// Exact limit when every residue class was resolved within the digit budget.
    #[serde(with = "option_rational")]
    pub limit: Option<BigRational>,
}

impl DensityRecord {
    /// The best available exact value: the Hensel limit, else the stabilized density.
    pub fn value(&self) -> Result<BigRational> {
        match (&self.limit, self.stabilized) {
            (Some(l), _) => Ok(l.clone()),
            (None, true) => Ok(self.density.clone()),
            (None, false) => Err(Error::Unstabilized { p: self.p, k_max: self.k }),
        }
    }
}

/// Counts `#{x mod p^k : f(x) ≡ level}` for `k = 0..=depth`, plus the exact limit density.
#[derive(Clone, Debug, PartialEq)]
pub struct CountSeries {
    pub p: u64,
    pub n: usize,
    pub counts: Vec<BigUint>,
    pub limit: Option<BigRational>,
}

impl CountSeries {
    pub fn density(&self, k: u32) -> BigRational {
        BigRational::new(
            BigInt::from(self.counts[k as usize].clone()),
            BigInt::from(BigUint::from(self.p).pow(k * (self.n as u32 - 1))),
        )
    }
}

/// Per-subtree tally, keyed so that merging is order-independent.
#[derive(Default)]
struct Tally {
    visited: Vec<u64>,
    /// `(j, e)`: smooth class at depth `j` with gradient valuation `e < j`.
    smooth: BTreeMap<(u32, u32), u64>,
    /// `(j, v)`: class at depth `j` where `f - m` has constant valuation `v`.
    empty: BTreeMap<(u32, u32), u64>,
    unresolved: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.visited.len() < other.visited.len() {
            self.visited.resize(other.visited.len(), 0);
        }
        for (i, v) in other.visited.into_iter().enumerate() {
            self.visited[i] += v;
        }
        for (key, v) in other.smooth {
            *self.smooth.entry(key).or_default() += v;
        }
        for (key, v) in other.empty {
            *self.empty.entry(key).or_default() += v;
        }
        self.unresolved += other.unresolved;
        self
    }

    fn total_visited(&self) -> u64 {
        self.visited.iter().sum()
    }
}

struct Dfs<'a> {
    spec: &'a VarietySpec,
    p: i128,
    level: i128,
    depth: u32,
    n: usize,
    pows: Vec<i128>,
}

impl Dfs<'_> {
    fn val(&self, v: i128) -> u32 {
        if v == 0 {
            u32::MAX
        } else {
            valuation_i128(v, self.p as u64)
        }
    }

    fn visit(&self, x: &mut Vec<i128>, j: u32, tally: &mut Tally) -> Result<()> {
        if tally.visited.len() <= j as usize {
            tally.visited.resize(j as usize + 1, 0);
        }
        tally.visited[j as usize] += 1;
        if tally.total_visited() > MAX_NODES {
            return Err(Error::TooLarge(format!("more than {MAX_NODES} residue classes")));
        }
        let fx = self.spec.evaluate_i128(x).ok_or(Error::Overflow)?;
        let diff = fx.checked_sub(self.level).ok_or(Error::Overflow)?;
        let grad = self.spec.gradient_i128(x).ok_or(Error::Overflow)?;
        let e = grad.iter().map(|&g| self.val(g)).min().unwrap_or(u32::MAX);
        if e < j {
            let v = self.val(diff);
            if v >= j + e {
                *tally.smooth.entry((j, e)).or_default() += 1;
            } else {
                *tally.empty.entry((j, v)).or_default() += 1;
            }
            return Ok(());
        }
        if j == self.depth {
            tally.unresolved += 1;
            return Ok(());
        }
        // grad ≡ 0 mod p^j, so every lift keeps f mod p^{j+1}
        if diff % self.pows[j as usize + 1] != 0 {
            return Ok(());
        }
        let step = self.pows[j as usize];
        let base = x.clone();
        for idx in 0..self.pows[1].pow(self.n as u32) {
            let mut r = idx;
            for (xi, b) in x.iter_mut().zip(&base) {
                *xi = b + step * (r % self.p);
                r /= self.p;
            }
            self.visit(x, j + 1, tally)?;
        }
        x.copy_from_slice(&base);
        Ok(())
    }
}

/// Digit DFS to `depth`, optionally restricted to `x ≢ 0 mod p`.
pub fn count_series(spec: &VarietySpec, level: i128, p: u64, depth: u32, primitive: bool) -> Result<CountSeries> {
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    let n = spec.ambient_dim();
    let pows: Vec<i128> = (0..=depth + 1)
        .map(|e| (p as i128).checked_pow(e).ok_or(Error::Overflow))
        .collect::<Result<_>>()?;
    let dfs = Dfs { spec, p: p as i128, level, depth, n, pows };
    let roots = (p as u128).checked_pow(n as u32).filter(|&r| r <= MAX_NODES as u128).ok_or_else(|| {
        Error::TooLarge(format!("{p}^{n} residue classes mod p"))
    })? as u64;
    let pi = p as i128;
    let tally = (0..roots)
        .into_par_iter()
        .try_fold(Tally::default, |mut tally, idx| {
            let mut r = idx as i128;
            let mut x: Vec<i128> = (0..n)
                .map(|_| {
                    let d = r % pi;
                    r /= pi;
                    d
                })
                .collect();
            if primitive && x.iter().all(|&v| v == 0) {
                return Ok(tally);
            }
            let fx = spec.evaluate_i128(&x).ok_or(Error::Overflow)?;
            if (fx - level).rem_euclid(pi) == 0 {
                dfs.visit(&mut x, 1, &mut tally)?;
            }
            Ok::<_, Error>(tally)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    Ok(assemble(&tally, p, n, depth, primitive))
}

fn assemble(tally: &Tally, p: u64, n: usize, depth: u32, primitive: bool) -> CountSeries {
    let pb = BigUint::from(p);
    let nn = n as u32;
    let mut counts = vec![BigUint::zero(); depth as usize + 1];
    counts[0] = BigUint::from(u64::from(!primitive));
    for (j, &v) in tally.visited.iter().enumerate() {
        counts[j] += v;
    }
    for (&(j, e), &mult) in &tally.smooth {
        for k in j + 1..=depth {
            let exp = if k <= j + e { nn * (k - j) } else { (k - j) * (nn - 1) + e };
            counts[k as usize] += pb.pow(exp) * mult;
        }
    }
    for (&(j, v), &mult) in &tally.empty {
        for k in j + 1..=depth.min(v) {
            counts[k as usize] += pb.pow(nn * (k - j)) * mult;
        }
    }
    let limit = (tally.unresolved == 0).then(|| {
        tally
            .smooth
            .iter()
            .map(|(&(j, e), &mult)| big_pow(p, e as i64 - j as i64 * (n as i64 - 1)) * BigInt::from(mult))
            .sum()
    });
    CountSeries { p, n, counts, limit }
}

fn record(series: &CountSeries, k_max: u32) -> DensityRecord {
    let stable = (1..=k_max).find(|&k| series.density(k) == series.density(k + 1));
    let k = stable.unwrap_or(k_max);
    DensityRecord {
        p: series.p,
        k,
        count: series.counts[k as usize].clone(),
        density: series.density(k),
        stabilized: stable.is_some(),
        limit: series.limit.clone(),
    }
}

/// Local density of `{f = m}` in `Z_p^n`.
pub fn local_density(spec: &VarietySpec, m: Level, p: u64, k_max: u32) -> Result<DensityRecord> {
    density_at(spec, m.get() as i128, p, k_max, false)
}

/// Density of `{f = level}` restricted to `x ≢ 0 mod p` (or all of `Z_p^n`).
pub fn density_at(spec: &VarietySpec, level: i128, p: u64, k_max: u32, primitive: bool) -> Result<DensityRecord> {
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!("k_max must be >= 2, got {k_max}")));
    }
    Ok(record(&count_series(spec, level, p, k_max + 1, primitive)?, k_max))
}

/// Volume of `{z : f(z) = m, |z|_p = p^j}`.
///
/// With `z = p^{-j} x`, `x` primitive, this is the primitive density of
/// `f(x) = m p^{dj}` times the Jacobian `p^{j(n-d)}`.
pub fn padic_sphere_volume(spec: &VarietySpec, m: Level, p: u64, j: i64, k_max: u32) -> Result<BigRational> {
    let d = spec.degree() as i64;
    let n = spec.ambient_dim() as i64;
    let vm = valuation_i128(m.get() as i128, p) as i64;
    if vm + d * j < 0 {
        // f(x) would have to be a non-integer
        return Ok(BigRational::zero());
    }
    let scaled = big_pow(p, d * j) * BigInt::from(m.get());
    let level = i128::try_from(scaled.to_integer()).map_err(|_| Error::Overflow)?;
    let rec = density_at(spec, level, p, k_max, true)?;
    Ok(rec.value()? * big_pow(p, j * (n - d)))
}

/// Smallest `j` with a possibly nonempty sphere: `-floor(v_p(m) / d)`.
pub fn min_sphere_index(spec: &VarietySpec, m: Level, p: u64) -> i64 {
    -((valuation_i128(m.get() as i128, p) / spec.degree()) as i64)
}

/// Volume of `{z : f(z) = m, |z|_p <= p^j}`, the sum of the spheres up to `j`.
pub fn padic_ball_volume(spec: &VarietySpec, m: Level, p: u64, j: i64, k_max: u32) -> Result<BigRational> {
    (min_sphere_index(spec, m, p)..=j)
        .map(|i| padic_sphere_volume(spec, m, p, i, k_max))
        .sum()
}

/// Sphere volumes for `j = 0..=j_max`.
pub fn sphere_series(spec: &VarietySpec, m: Level, p: u64, j_max: i64, k_max: u32) -> Result<Vec<(i64, BigRational)>> {
    (0..=j_max)
        .map(|j| Ok((j, padic_sphere_volume(spec, m, p, j, k_max)?)))
        .collect()
}

/// Volumes `w_T` of `{z ∈ prod_{p∈S} Z_p-points : prod_p |z|_p <= T}` for each `T`.
///
/// The set is a disjoint union of products of spheres, so `w_T` is the sum of the
/// products of sphere volumes over exponent vectors with `prod p^{j_p} <= T`.
pub fn multi_prime_ball_volumes(
    spec: &VarietySpec,
    m: Level,
    places: &PlaceSet,
    t_grid: &[u64],
    k_max: Option<u32>,
) -> Result<Vec<(u64, BigRational)>> {
    let primes = places.finite_primes();
    if primes.is_empty() {
        return Err(Error::InvalidPlaces("need at least one finite prime".into()));
    }
    let t_max = BigRational::from_integer(BigInt::from(t_grid.iter().copied().max().unwrap_or(1)));
    let mut spheres: Vec<Vec<(BigRational, BigRational)>> = Vec::new();
    for &p in primes {
        let k = k_max.unwrap_or_else(|| default_k_max(p));
        let mut row = Vec::new();
        let mut j = min_sphere_index(spec, m, p);
        while big_pow(p, j) <= t_max {
            row.push((big_pow(p, j), padic_sphere_volume(spec, m, p, j, k)?));
            j += 1;
        }
        spheres.push(row);
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let mut total = BigRational::zero();
            let t_big = BigRational::from_integer(BigInt::from(t));
            product_sum(&spheres, &BigRational::one(), &t_big, &BigRational::one(), &mut total);
            (t, total)
        })
        .collect())
}

fn product_sum(
    spheres: &[Vec<(BigRational, BigRational)>],
    radius: &BigRational,
    t: &BigRational,
    acc: &BigRational,
    total: &mut BigRational,
) {
    let Some((row, rest)) = spheres.split_first() else {
        *total += acc;
        return;
    };
    for (r, v) in row {
        let next = radius * r;
        if &next > t {
            break;
        }
        if !v.is_zero() {
            product_sum(rest, &next, t, &(acc * v), total);
        }
    }
}

/// Result of a period search over a `(j, v_j)` series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureFit {
    pub period: u32,
    pub classes: Vec<ClassFit>,
    /// Root-mean-square residual over all fitted points, in `log_q` units.
    pub residual_rms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassFit {
    /// Every term in the class vanishes.
    Empty { residue: u32 },
    /// `v_j ≈ c q^{a j} j^b` on the class.
    Fit { residue: u32, fit: AsymptoticFit },
}

impl StructureFit {
    pub fn max_exponent(&self) -> Option<f64> {
        self.classes
            .iter()
            .filter_map(|c| match c {
                ClassFit::Fit { fit, .. } => Some(fit.a),
                ClassFit::Empty { .. } => None,
            })
            .reduce(f64::max)
    }
}

/// Finds the period `N_0 <= max_period` and per-class laws `c q^{a j} j^b` that best
/// describe the series (terms with `j <= 0` are ignored because `log j` is undefined).
pub fn structure_fit(series: &[(i64, f64)], q: u64, max_period: u32) -> Result<StructureFit> {
    let pts: Vec<(i64, f64)> = series.iter().copied().filter(|&(j, _)| j > 0).collect();
    let nonzero = pts.iter().filter(|(_, v)| *v != 0.0).count();
    if nonzero < 8 {
        return Err(Error::InsufficientData(format!("need >= 8 nonzero terms with j > 0, got {nonzero}")));
    }
    if pts.iter().any(|&(_, v)| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("volumes must be finite and nonnegative".into()));
    }
    if q < 2 {
        return Err(Error::InvalidArgument("q must be >= 2".into()));
    }
    let lq = (q as f64).ln();
    let mut best: Option<StructureFit> = None;
    for period in 1..=max_period.max(1) {
        let Some(candidate) = fit_period(&pts, lq, period) else { continue };
        if best.as_ref().is_none_or(|b| candidate.residual_rms < b.residual_rms - 1e-9) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::InsufficientData("no period gives a consistent class structure".into()))
}

fn fit_period(pts: &[(i64, f64)], lq: f64, period: u32) -> Option<StructureFit> {
    let mut classes = Vec::new();
    let mut sq = 0.0;
    let mut used = 0usize;
    for residue in 0..period {
        let class: Vec<(i64, f64)> = pts.iter().copied().filter(|&(j, _)| j.rem_euclid(period as i64) == residue as i64).collect();
        let zeros = class.iter().filter(|(_, v)| *v == 0.0).count();
        if zeros == class.len() {
            classes.push(ClassFit::Empty { residue });
            continue;
        }
        if zeros > 0 || class.len() < 2 {
            return None;
        }
        let js: Vec<f64> = class.iter().map(|&(j, _)| j as f64).collect();
        let logs: Vec<f64> = class.iter().map(|&(_, v)| v.ln() / lq).collect();
        let mut class_best: Option<AsymptoticFit> = None;
        let max_b = if class.len() >= 3 { MAX_LOG_POWER } else { 0 };
        for b in 0..=max_b {
            let ys: Vec<f64> = js.iter().zip(&logs).map(|(j, l)| l - b as f64 * j.ln() / lq).collect();
            let (intercept, a, rms) = linear_fit(&js, &ys).ok()?;
            if class_best.as_ref().is_none_or(|f| rms < f.residual_rms - 1e-12) {
                class_best = Some(AsymptoticFit {
                    a,
                    b,
                    c: (intercept * lq).exp(),
                    residual_rms: rms,
                    grid: class.iter().map(|&(j, v)| (j as f64, v)).collect(),
                });
            }
        }
        let fit = class_best?;
        sq += fit.residual_rms.powi(2) * class.len() as f64;
        used += class.len();
        classes.push(ClassFit::Fit { residue, fit });
    }
    (used > 0).then(|| StructureFit { period, classes, residual_rms: (sq / used as f64).sqrt() })
}

/// Ratios `w_{2T} / w_T` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub ratios: Vec<(f64, f64)>,
    pub max_ratio: f64,
    /// The last three ratios are strictly increasing.
    pub growing: bool,
}

pub fn doubling_check(series: &[(f64, f64)]) -> Result<DoublingReport> {
    let mut ratios = Vec::new();
    for &(t, w) in series {
        let Some(&(_, w2)) = series.iter().find(|(t2, _)| (t2 - 2.0 * t).abs() <= 1e-9 * t.abs().max(1.0)) else {
            continue;
        };
        if !(w > 0.0 && w2 > 0.0) {
            return Err(Error::InvalidArgument(format!("w must be positive at T = {t} and 2T")));
        }
        ratios.push((t, w2 / w));
    }
    if ratios.is_empty() {
        return Err(Error::InsufficientData("grid has no doubling pairs".into()));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max_ratio = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    let growing = tail.len() == 3 && tail.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(DoublingReport { ratios, max_ratio, growing })
}

/// `sum_{j' <= j} p^{-k0 j'} sphere(j')` for each `j` of a sphere series.
pub fn weighted_tail(series: &[(i64, BigRational)], p: u64, k0: i64) -> Vec<(i64, BigRational)> {
    let mut acc = BigRational::zero();
    series
        .iter()
        .map(|(j, v)| {
            acc += v * big_pow(p, -k0 * j);
            (*j, acc.clone())
        })
        .collect()
}

/// `(j, f64)` view of an exact series, for fitting.
pub fn to_f64_series(series: &[(i64, BigRational)]) -> Vec<(i64, f64)> {
    series.iter().map(|(j, v)| (*j, rational_to_f64(v))).collect()
}

/// CSV rows `j,numerator,denominator`.
pub fn series_csv(series: &[(i64, BigRational)]) -> String {
    let mut out = String::from("j,numerator,denominator\n");
    for (j, v) in series {
        out.push_str(&format!("{j},{},{}\n", v.numer(), v.denom()));
    }
    out
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod option_rational {
    use crate::arith::{format_rational, parse_rational};
    use num_rational::BigRational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(format_rational).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigRational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rational(&s).map_err(D::Error::custom))
            .transpose()
    }
}

impl std::fmt::Display for DensityRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "p={} k={} count={} density={}", self.p, self.k, self.count, format_rational(&self.density))?;
        if !self.stabilized {
            write!(f, " (unstabilized)")?;
        }
        Ok(())
    }
}
