//! Height-ball counts against height-ball volumes.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{fmt_f64, long_csv, Summary};
use crate::arith::{big_pow, rational_to_f64, valuation_i128};
use crate::enumerate::{integral_points, max_abs_value};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::places::{PlaceSet, SPoint};
use crate::varieties::{Level, VarietySpec};
use crate::volumes_arch::{shell_volume, McParams, VolumeEstimate};
use crate::volumes_padic::{default_k_max, min_sphere_index, padic_sphere_volume};

/// Shortest accepted height grid.
pub const MIN_GRID_LEN: usize = 4;

/// An S-point together with its height, `H_S(z) = |x|` for the S-primitive integer
/// multiple `x` of `z`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HeightPoint {
    pub height_sq: u128,
    pub point: SPoint,
}

/// All `z ∈ V_m(Z_S)` with `H_S(z) < t`, sorted by height then point.
///
/// Each such `z` is `x / s` for a unique S-primitive integer `x` and positive
/// S-unit `s` with `f(x) = m s^d`, and then `H_S(z) = |x|`.
pub fn s_points_below_height(spec: &VarietySpec, m: Level, places: &PlaceSet, t: u64) -> Result<Vec<HeightPoint>> {
    if t <= 1 {
        return Ok(Vec::new());
    }
    let d = spec.degree();
    let bound = t - 1;
    let max_f = max_abs_value(spec, bound);
    // smallest admissible s = prod p^{-floor(v_p(m)/d)}
    let mut s_min = BigRational::one();
    for &p in places.finite_primes() {
        s_min *= big_pow(p, -((valuation_i128(m.get() as i128, p) / d) as i64));
    }
    let base = BigRational::from_integer(BigInt::from(m.get())) * num_traits::pow(s_min.clone(), d as usize);
    debug_assert!(base.is_integer());
    let base_abs = base.abs().to_integer();
    let max_u = ((max_f as f64) / rational_to_f64(&base.abs())).powf(1.0 / d as f64).floor() as u128 + 1;
    let t_sq = (t as u128) * (t as u128);
    let mut out = Vec::new();
    for u in places.semigroup_up_to(max_u) {
        let ud = BigInt::from(u).pow(d);
        if &base_abs * &ud > BigInt::from(max_f) {
            continue;
        }
        let level = i64::try_from(base.to_integer() * &ud).map_err(|_| Error::Overflow)?;
        let s = &s_min * BigRational::from_integer(BigInt::from(u));
        let (num, den) = (
            u64::try_from(s.numer()).map_err(|_| Error::Overflow)?,
            u64::try_from(s.denom()).map_err(|_| Error::Overflow)?,
        );
        for x in integral_points(spec, Level::new(level)?, bound)? {
            if places.finite_primes().iter().any(|&p| x.iter().all(|v| v % p as i64 == 0)) {
                continue;
            }
            let h: u128 = x.iter().map(|&v| (v as i128 * v as i128) as u128).sum();
            if h >= t_sq {
                continue;
            }
            let scaled: Vec<i64> = x.iter().map(|&v| v * den as i64).collect();
            out.push(HeightPoint { height_sq: h, point: SPoint::new(scaled, num, places)? });
        }
    }
    out.sort();
    Ok(out)
}

/// One stratum `{z : |z|_p = p^{j_p} for p ∈ S}` with exact p-adic weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Stratum {
    pub exponents: Vec<i64>,
    /// `prod p^{j_p}`.
    pub radius: BigRational,
    /// `prod sphere_p(j_p)`.
    pub weight: BigRational,
}

/// Per-prime sphere volumes with radius below `r_max`.
fn sphere_rows(spec: &VarietySpec, m: Level, places: &PlaceSet, r_max: f64, k_max: Option<u32>) -> Result<Vec<Vec<(i64, BigRational)>>> {
    places
        .finite_primes()
        .iter()
        .map(|&p| {
            let mut row = Vec::new();
            let mut j = min_sphere_index(spec, m, p);
            while (p as f64).powi(j as i32) < r_max {
                row.push((j, padic_sphere_volume(spec, m, p, j, k_max.unwrap_or_else(|| default_k_max(p)))?));
                j += 1;
            }
            Ok(row)
        })
        .collect()
}

/// Strata whose real factor can be nonempty below height `t_max`: the real norm
/// `t / R` must exceed the minimal norm on `V_m(R)`.
pub fn strata(spec: &VarietySpec, m: Level, places: &PlaceSet, t_max: f64, k_max: Option<u32>) -> Result<Vec<Stratum>> {
    let r_max = t_max / spec.min_norm_bound(m);
    let rows = sphere_rows(spec, m, places, r_max, k_max)?;
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::new(), BigRational::one(), BigRational::one())];
    while let Some((i, exps, radius, weight)) = stack.pop() {
        if i == rows.len() {
            out.push(Stratum { exponents: exps, radius, weight });
            continue;
        }
        let p = places.finite_primes()[i];
        for (j, v) in rows[i].iter().rev() {
            if v.is_zero() {
                continue;
            }
            let r = &radius * big_pow(p, *j);
            if rational_to_f64(&r) >= r_max {
                continue;
            }
            let mut e = exps.clone();
            e.push(*j);
            stack.push((i + 1, e, r, &weight * v));
        }
    }
    out.sort_by(|a, b| a.exponents.cmp(&b.exponents));
    Ok(out)
}

/// Total p-adic weight at each radius `R`, built by convolving one prime at a time.
pub fn radius_weights(spec: &VarietySpec, m: Level, places: &PlaceSet, t_max: f64, k_max: Option<u32>) -> Result<BTreeMap<BigRational, BigRational>> {
    let r_max = t_max / spec.min_norm_bound(m);
    let rows = sphere_rows(spec, m, places, r_max, k_max)?;
    let mut dist: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    dist.insert(BigRational::one(), BigRational::one());
    for (row, &p) in rows.iter().zip(places.finite_primes()) {
        let mut next = BTreeMap::new();
        for (r, w) in &dist {
            for (j, v) in row {
                let radius = r * big_pow(p, *j);
                if v.is_zero() || rational_to_f64(&radius) >= r_max {
                    continue;
                }
                *next.entry(radius).or_insert_with(BigRational::zero) += w * v;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Memoized real ball volumes `v(r)` on `V_m(R)`; every radius uses the same seed.
pub struct RealVolumes<'a> {
    spec: &'a VarietySpec,
    m: Level,
    mc: McParams,
    cache: BTreeMap<u64, VolumeEstimate>,
}

impl<'a> RealVolumes<'a> {
    pub fn new(spec: &'a VarietySpec, m: Level, mc: McParams) -> Self {
        RealVolumes { spec, m, mc, cache: BTreeMap::new() }
    }

    pub fn get(&mut self, r: f64) -> Result<VolumeEstimate> {
        if let Some(v) = self.cache.get(&r.to_bits()) {
            return Ok(v.clone());
        }
        let v = shell_volume(self.spec, self.m, r, &self.mc)?;
        self.cache.insert(r.to_bits(), v.clone());
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingRow {
    pub t: u64,
    pub count: u64,
    /// Sum over strata of weight times real volume.
    pub volume: f64,
    /// Same quantity via per-radius weights.
    pub volume_direct: f64,
    pub volume_stderr: f64,
    /// `count / volume`, absent when the volume vanishes.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingReport {
    pub spec: VarietySpec,
    pub places: PlaceSet,
    pub level: i64,
    pub seed: u64,
    pub samples: u64,
    pub rows: Vec<CountingRow>,
    /// `(max r - min r) / mean r` over the top half of the grid.
    pub spread_top_half: Option<f64>,
    /// Fitted exponent in `|r(T)/r(T_max) - 1| ~ T^{-delta}`.
    pub delta: Option<f64>,
    pub empty: bool,
    /// Largest relative gap between the two volume computations.
    pub volume_consistency: f64,
}

pub fn counting_experiment(spec: &VarietySpec, places: &PlaceSet, m: Level, t_grid: &[u64], mc: &McParams) -> Result<CountingReport> {
    if t_grid.len() < MIN_GRID_LEN {
        return Err(Error::InvalidArgument(format!("height grid needs >= {MIN_GRID_LEN} values, got {}", t_grid.len())));
    }
    if t_grid[0] == 0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("height grid must be positive and strictly increasing".into()));
    }
    let t_max = *t_grid.last().unwrap();
    let points = s_points_below_height(spec, m, places, t_max)?;
    let strata = strata(spec, m, places, t_max as f64, None)?;
    let weights = radius_weights(spec, m, places, t_max as f64, None)?;
    let mut real = RealVolumes::new(spec, m, *mc);

    let mut rows = Vec::with_capacity(t_grid.len());
    let mut consistency: f64 = 0.0;
    for &t in t_grid {
        let t_sq = (t as u128) * (t as u128);
        let count = points.iter().take_while(|p| p.height_sq < t_sq).count() as u64;
        let (mut volume, mut stderr) = (0.0, 0.0);
        for s in &strata {
            let w = rational_to_f64(&s.weight);
            let v = real.get(t as f64 / rational_to_f64(&s.radius))?;
            volume += w * v.value;
            stderr += w * v.stderr;
        }
        let mut volume_direct = 0.0;
        for (r, w) in &weights {
            volume_direct += rational_to_f64(w) * real.get(t as f64 / rational_to_f64(r))?.value;
        }
        if volume > 0.0 {
            consistency = consistency.max((volume - volume_direct).abs() / volume);
        }
        let ratio = (volume > 0.0).then(|| count as f64 / volume);
        rows.push(CountingRow { t, count, volume, volume_direct, volume_stderr: stderr, ratio });
    }

    let empty = rows.iter().all(|r| r.count == 0);
    let (spread, delta) = if empty { (None, None) } else { (spread_top_half(&rows), fit_delta(&rows)) };
    Ok(CountingReport {
        spec: spec.clone(),
        places: places.clone(),
        level: m.get(),
        seed: mc.seed,
        samples: mc.samples,
        rows,
        spread_top_half: spread,
        delta,
        empty,
        volume_consistency: consistency,
    })
}

fn spread_top_half(rows: &[CountingRow]) -> Option<f64> {
    let top: Vec<f64> = rows[rows.len() / 2..].iter().map(|r| r.ratio).collect::<Option<_>>()?;
    let mean = top.iter().sum::<f64>() / top.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    let (lo, hi) = top.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Some((hi - lo) / mean)
}

fn fit_delta(rows: &[CountingRow]) -> Option<f64> {
    let last = rows.last()?.ratio.filter(|r| *r > 0.0)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows[..rows.len() - 1]
        .iter()
        .filter_map(|r| {
            let dev = (r.ratio? / last - 1.0).abs();
            (dev > 0.0).then(|| ((r.t as f64).ln(), dev.ln()))
        })
        .unzip();
    linear_fit(&xs, &ys).ok().map(|(_, slope, _)| -slope)
}

impl CountingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,count,volume,volume_direct,volume_stderr,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t,
                r.count,
                fmt_f64(r.volume),
                fmt_f64(r.volume_direct),
                fmt_f64(r.volume_stderr),
                r.ratio.map_or(String::new(), fmt_f64)
            ));
        }
        out
    }

    pub fn long_csv(&self) -> String {
        let mut rows = Vec::new();
        for r in &self.rows {
            rows.push(("count", r.t as f64, r.count as f64));
            rows.push(("volume", r.t as f64, r.volume));
            if let Some(ratio) = r.ratio {
                rows.push(("ratio", r.t as f64, ratio));
            }
        }
        long_csv(&rows)
    }

    pub fn summary(&self) -> Summary {
        Summary::new(
            "count",
            json!({
                "spec": self.spec,
                "places": self.places,
                "level": self.level,
                "grid": self.rows.iter().map(|r| r.t).collect::<Vec<_>>(),
                "seed": self.seed,
                "samples": self.samples,
            }),
            json!({
                "empty": self.empty,
                "spread_top_half": self.spread_top_half,
                "spread_below_10pct": self.spread_top_half.map(|s| s < 0.1),
                "delta": self.delta,
                "delta_positive": self.delta.map(|d| d > 0.0),
                "volume_consistency": self.volume_consistency,
                "counts_nondecreasing": self.rows.windows(2).all(|w| w[0].count <= w[1].count),
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heights::{height_spoint, HeightProfile};

    fn lvl(m: i64) -> Level {
        Level::new(m).unwrap()
    }

    #[test]
    fn s_points_have_the_recorded_height() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let places = PlaceSet::new(vec![2]).unwrap();
        let pts = s_points_below_height(&f, lvl(1), &places, 12).unwrap();
        assert!(pts.iter().any(|p| p.point.denominator > 1));
        let prof = HeightProfile::new(places.clone());
        for hp in &pts {
            let z = hp.point.to_rationals();
            assert_eq!(f.evaluate(&z).unwrap(), BigRational::one());
            let h = height_spoint(&hp.point, &prof).unwrap();
            assert_eq!(h.squared(), BigRational::from_integer(BigInt::from(hp.height_sq)));
        }
    }

    /// Brute force over `x / 3^k`, filtered by exact height. A point `x / q` with
    /// `x` primitive at 3 has height `|x|`, so `|x| < t` and `q^2 = f(x) < t^2`.
    #[test]
    fn s_point_count_matches_brute_force() {
        let f = VarietySpec::diagonal(&[1, 1, 1]).unwrap();
        let places = PlaceSet::new(vec![3]).unwrap();
        let prof = HeightProfile::new(places.clone());
        let t = 10i64;
        let mut brute = std::collections::BTreeSet::new();
        for q in [1i64, 3, 9] {
            for x in -t..=t {
                for y in -t..=t {
                    for z in -t..=t {
                        if x * x + y * y + z * z != q * q {
                            continue;
                        }
                        let pt = SPoint::new(vec![x, y, z], q as u64, &places).unwrap();
                        if height_spoint(&pt, &prof).unwrap().less_than(&BigRational::from_integer(t.into())) {
                            brute.insert(pt);
                        }
                    }
                }
            }
        }
        let ours: std::collections::BTreeSet<SPoint> =
            s_points_below_height(&f, lvl(1), &places, t as u64).unwrap().into_iter().map(|h| h.point).collect();
        assert!(brute.iter().any(|z| z.denominator == 9));
        assert_eq!(ours, brute);
    }

    #[test]
    fn two_volume_paths_agree() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let places = PlaceSet::new(vec![2, 3]).unwrap();
        let rep = counting_experiment(&f, &places, lvl(1), &[4, 6, 8, 12], &McParams::new(20_000, 1)).unwrap();
        assert!(rep.volume_consistency < 1e-12, "{}", rep.volume_consistency);
        assert!(rep.rows.windows(2).all(|w| w[0].count <= w[1].count));
    }

    #[test]
    fn grid_preconditions() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let mc = McParams::new(1000, 1);
        assert!(counting_experiment(&f, &PlaceSet::archimedean(), lvl(1), &[8, 16, 32], &mc).is_err());
        assert!(counting_experiment(&f, &PlaceSet::archimedean(), lvl(1), &[8, 16, 16, 32], &mc).is_err());
    }

    #[test]
    fn empty_levels_give_empty_report() {
        // 7^k ≡ 7 mod 8 for odd k, and 7 * 7^{2k} has the same residue: never three squares
        let f = VarietySpec::diagonal(&[1, 1, 1]).unwrap();
        let places = PlaceSet::new(vec![7]).unwrap();
        let rep = counting_experiment(&f, &places, lvl(7), &[4, 8, 16, 32, 64], &McParams::new(2000, 1)).unwrap();
        assert!(rep.empty && rep.delta.is_none());
        assert!(rep.rows.iter().all(|r| r.count == 0));
    }
}
