//! Invariant-measure volumes of norm balls on the real points `V_m(R)`.
//!
//! The measure is the Gelfand–Leray form `dx/df`. It is estimated by Monte Carlo
//! as `Leb{x : |f(x) - m| <= eps, r_lo <= |x| <= r_hi} / (2 eps)`: the first `n-1`
//! coordinates are drawn uniformly from the cube `[-r_hi, r_hi]^{n-1}` and the
//! slice along the remaining coordinate is integrated exactly, which is possible
//! because every coordinate enters `f` with degree at most two.
//!
//! Sampling is split into fixed-size batches. Batch `i` draws from a ChaCha8
//! stream keyed by `(seed, i)`, batches run in parallel, and partial sums are
//! merged in batch order, so results depend only on `(seed, samples)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_power_log, AsymptoticFit};
use crate::varieties::{Level, VarietyKind, VarietySpec};

pub const BATCH_SIZE: u64 = 1 << 14;
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
/// Default shell half-width relative to `|m|`.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 0.01;
/// Stream offset separating the in-slice draws from the cube draws.
const SLICE_STREAM: u64 = 1 << 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeMethod {
    ShellMc,
    ExactPadic,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: VolumeMethod,
    pub samples: u64,
    /// More than 1% of the shell hits sat where `grad f` (numerically) vanishes.
    #[serde(default)]
    pub degenerate: bool,
}

impl VolumeEstimate {
    pub fn exact(value: f64, method: VolumeMethod) -> Self {
        VolumeEstimate { value, stderr: 0.0, method, samples: 0, degenerate: false }
    }
}

/// Monte Carlo settings shared by every shell estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    /// Shell half-width; `None` means `0.01 |m|`.
    pub epsilon: Option<f64>,
    pub samples: u64,
    pub seed: u64,
}

impl Default for McParams {
    fn default() -> Self {
        McParams { epsilon: None, samples: DEFAULT_SAMPLES, seed: 0 }
    }
}

impl McParams {
    pub fn new(samples: u64, seed: u64) -> Self {
        McParams { epsilon: None, samples, seed }
    }

    pub fn epsilon_for(&self, m: Level) -> f64 {
        self.epsilon.unwrap_or(DEFAULT_RELATIVE_EPSILON * (m.get() as f64).abs())
    }

    /// Same settings with the seed moved to an independent stream family.
    pub fn reseeded(&self, salt: u64) -> Self {
        McParams { seed: self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15), ..*self }
    }
}

/// Indicator of a region in `V_1` coordinates.
pub type Indicator<'a> = dyn Fn(&[f64]) -> bool + Sync + 'a;

/// What to integrate over the shell.
pub struct ShellQuery<'a> {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Integrand exponent: weight `|x|^{-k0}`.
    pub k0: f64,
    /// Optional indicator in `V_1` coordinates, applied to `x / m^{1/d}`.
    pub region: Option<&'a Indicator<'a>>,
}

impl ShellQuery<'_> {
    pub fn ball(t: f64) -> Self {
        ShellQuery { r_lo: 0.0, r_hi: t, k0: 0.0, region: None }
    }

    fn weighted(&self) -> bool {
        self.k0 != 0.0 || self.region.is_some()
    }
}

/// Gelfand–Leray volume of `{x ∈ V_m(R) : |x| <= t}`.
pub fn shell_volume(spec: &VarietySpec, m: Level, t: f64, mc: &McParams) -> Result<VolumeEstimate> {
    shell_integral(spec, m, &ShellQuery::ball(t), mc)
}

/// `∫_{B_t} |x|^{-k0} dμ` on `V_m(R)`.
pub fn tail_integral(spec: &VarietySpec, m: Level, t: f64, k0: f64, mc: &McParams) -> Result<VolumeEstimate> {
    shell_integral(spec, m, &ShellQuery { r_lo: 0.0, r_hi: t, k0, region: None }, mc)
}

/// General shell estimator behind [`shell_volume`] and [`tail_integral`].
pub fn shell_integral(spec: &VarietySpec, m: Level, query: &ShellQuery<'_>, mc: &McParams) -> Result<VolumeEstimate> {
    let eps = mc.epsilon_for(m);
    if !(eps > 0.0 && eps <= (m.get() as f64).abs() / 10.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, |m|/10], got {eps}")));
    }
    if !(query.r_hi > 0.0 && query.r_hi.is_finite() && query.r_lo >= 0.0 && query.r_lo <= query.r_hi) {
        return Err(Error::InvalidArgument(format!(
            "radial range must satisfy 0 <= r_lo <= r_hi, r_hi > 0 (got {}..{})",
            query.r_lo, query.r_hi
        )));
    }
    if mc.samples < 1000 {
        return Err(Error::InvalidArgument(format!("need >= 1000 samples, got {}", mc.samples)));
    }

    let n = spec.ambient_dim();
    let k = solve_coordinate(spec);
    let r = query.r_hi;
    let cube = (2.0 * r).powi(n as i32 - 1);
    let norm = cube / (2.0 * eps);
    let target = m.get() as f64;
    let to_unit = spec.projection_scale(m).ok();
    if query.region.is_some() && to_unit.is_none() {
        return Err(Error::NoRealRoot { level: m.get(), degree: spec.degree() });
    }

    let batches = mc.samples.div_ceil(BATCH_SIZE);
    let partials: Vec<Partial> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH_SIZE.min(mc.samples - b * BATCH_SIZE);
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(b);
            let mut slice_rng = ChaCha8Rng::seed_from_u64(mc.seed);
            slice_rng.set_stream(b | SLICE_STREAM);
            let mut x = vec![0.0; n];
            let mut unit = vec![0.0; n];
            let mut acc = Partial::default();
            for _ in 0..count {
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = if i == k { 0.0 } else { rng.gen_range(-r..r) };
                }
                let rest_sq: f64 = x.iter().map(|v| v * v).sum();
                let (a, bq, c) = spec.line_coefficients_f64(&x, k);
                let set = slice_set(a, bq, c, target, eps, rest_sq, query.r_lo, r);
                let len = total_length(&set);
                let mut value = len;
                if len > 0.0 {
                    let t = sample_in(&set, len, slice_rng.gen::<f64>());
                    x[k] = t;
                    if query.weighted() {
                        if query.k0 != 0.0 {
                            value *= (rest_sq + t * t).powf(-query.k0 / 2.0);
                        }
                        if let Some(region) = query.region {
                            let s = to_unit.unwrap();
                            unit.iter_mut().zip(&x).for_each(|(u, v)| *u = v * s);
                            if !region(&unit) {
                                value = 0.0;
                            }
                        }
                    }
                    if value > 0.0 {
                        acc.hits += 1;
                        let g = spec.gradient(&x).map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt());
                        if g.map_or(true, |g| g < 1e-9 * (1.0 + target.abs())) {
                            acc.singular += 1;
                        }
                    }
                    x[k] = 0.0;
                }
                acc.sum += value;
                acc.sumsq += value * value;
            }
            acc.count = count;
            acc
        })
        .collect();

    let total = partials.into_iter().fold(Partial::default(), Partial::merge);
    let nf = total.count as f64;
    let mean = total.sum / nf;
    let var = ((total.sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(VolumeEstimate {
        value: norm * mean,
        stderr: norm * (var / nf).sqrt(),
        method: VolumeMethod::ShellMc,
        samples: total.count,
        degenerate: total.hits > 0 && total.singular * 100 > total.hits,
    })
}

#[derive(Clone, Copy, Debug, Default)]
struct Partial {
    sum: f64,
    sumsq: f64,
    count: u64,
    hits: u64,
    singular: u64,
}

impl Partial {
    fn merge(self, o: Partial) -> Partial {
        Partial {
            sum: self.sum + o.sum,
            sumsq: self.sumsq + o.sumsq,
            count: self.count + o.count,
            hits: self.hits + o.hits,
            singular: self.singular + o.singular,
        }
    }
}

/// Coordinate integrated exactly: largest diagonal entry for quadrics, the last
/// matrix entry otherwise.
fn solve_coordinate(spec: &VarietySpec) -> usize {
    match spec.kind() {
        VarietyKind::Quadric => {
            let q = spec.quadric_matrix().unwrap();
            (0..q.len()).rev().max_by_key(|&i| q[i][i].unsigned_abs()).unwrap()
        }
        _ => spec.ambient_dim() - 1,
    }
}

type Intervals = Vec<(f64, f64)>;

/// `{t ∈ [-r, r] : |a t^2 + b t + c - m| <= eps, r_lo^2 <= rest_sq + t^2 <= r^2}`.
#[allow(clippy::too_many_arguments)]
fn slice_set(a: f64, b: f64, c: f64, m: f64, eps: f64, rest_sq: f64, r_lo: f64, r: f64) -> Intervals {
    let room = r * r - rest_sq;
    if room < 0.0 {
        return Vec::new();
    }
    let s = room.sqrt();
    let mut set = vec![(-s, s)];
    let inner = r_lo * r_lo - rest_sq;
    if inner > 0.0 {
        let w = inner.sqrt();
        set = intersect(&set, &[(-s, -w), (w, s)]);
    }
    let below = quad_nonpositive(a, b, c - (m + eps), s);
    let above = quad_nonpositive(-a, -b, (m - eps) - c, s);
    intersect(&intersect(&set, &below), &above)
}

/// `{t ∈ [-s, s] : a t^2 + b t + c <= 0}`.
fn quad_nonpositive(a: f64, b: f64, c: f64, s: f64) -> Intervals {
    let whole = vec![(-s, s)];
    if a == 0.0 {
        if b == 0.0 {
            return if c <= 0.0 { whole } else { Vec::new() };
        }
        let root = -c / b;
        let half = if b > 0.0 { (-s, root.min(s)) } else { (root.max(-s), s) };
        return clip(vec![half], s);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return if a > 0.0 { Vec::new() } else { whole };
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        let (u, v) = (q / a, c / q);
        (u.min(v), u.max(v))
    };
    if a > 0.0 {
        clip(vec![(r1, r2)], s)
    } else {
        clip(vec![(-s, r1), (r2, s)], s)
    }
}

fn clip(set: Intervals, s: f64) -> Intervals {
    set.into_iter()
        .map(|(lo, hi)| (lo.max(-s), hi.min(s)))
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

fn intersect(x: &[(f64, f64)], y: &[(f64, f64)]) -> Intervals {
    let mut out = Vec::new();
    for &(a, b) in x {
        for &(c, d) in y {
            let lo = a.max(c);
            let hi = b.min(d);
            if lo < hi {
                out.push((lo, hi));
            }
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

fn total_length(set: &[(f64, f64)]) -> f64 {
    set.iter().map(|(lo, hi)| hi - lo).sum()
}

/// Point at fraction `u` of the total length of `set`.
fn sample_in(set: &[(f64, f64)], len: f64, u: f64) -> f64 {
    let mut rest = u * len;
    for &(lo, hi) in set {
        let w = hi - lo;
        if rest <= w {
            return lo + rest;
        }
        rest -= w;
    }
    set.last().map_or(0.0, |p| p.1)
}

/// Shell volumes on a grid of radii, one seed stream per radius.
pub fn volume_grid(spec: &VarietySpec, m: Level, radii: &[f64], mc: &McParams) -> Result<Vec<(f64, VolumeEstimate)>> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &t)| Ok((t, shell_volume(spec, m, t, &mc.reseeded(i as u64 + 1))?)))
        .collect()
}

/// [`fit_power_log`] on a grid of shell volumes.
pub fn fit_volume_growth(grid: &[(f64, VolumeEstimate)]) -> Result<AsymptoticFit> {
    let pts: Vec<(f64, f64)> = grid.iter().map(|(t, v)| (*t, v.value)).collect();
    fit_power_log(&pts)
}

/// Measured `(v_{(1+eps)T} - v_T) / (v_T + 1)` for each `(T, eps)` pair.
pub fn doubling_regularity(
    spec: &VarietySpec,
    m: Level,
    radii: &[f64],
    eps_list: &[f64],
    mc: &McParams,
) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for &t in radii {
        let base = shell_volume(spec, m, t, mc)?;
        for &e in eps_list {
            let ring = shell_integral(spec, m, &ShellQuery { r_lo: t, r_hi: (1.0 + e) * t, k0: 0.0, region: None }, mc)?;
            out.push((t, e, ring.value / (base.value + 1.0)));
        }
    }
    Ok(out)
}

/// Closed-form Gelfand–Leray volumes for the standard sphere `x_1^2 + ... + x_n^2 = m`
/// and the standard hyperboloid `x^2 + y^2 + z^2 - w^2 = m` (`m > 0`). `None` for
/// any other variety.
pub fn closed_form_volume(spec: &VarietySpec, m: Level, t: f64) -> Option<VolumeEstimate> {
    let q = spec.quadric_matrix()?;
    let n = q.len();
    let diag_only = (0..n).all(|i| (0..n).all(|j| i == j || q[i][j] == 0));
    if !diag_only || m.get() <= 0 {
        return None;
    }
    let mv = m.get() as f64;
    let diag: Vec<i64> = (0..n).map(|i| q[i][i]).collect();
    if diag.iter().all(|&d| d == 1) {
        let r = mv.sqrt();
        if t < r {
            return Some(VolumeEstimate::exact(0.0, VolumeMethod::ClosedForm));
        }
        // area of the radius-r sphere divided by |grad f| = 2r
        let area = 2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n) * r.powi(n as i32 - 1);
        return Some(VolumeEstimate::exact(area / (2.0 * r), VolumeMethod::ClosedForm));
    }
    if diag == [1, 1, 1, -1] {
        // |x'|^2 = m + w^2 and |x|^2 = m + 2 w^2; each w-slice contributes 2π sqrt(m + w^2)
        if t * t < mv {
            return Some(VolumeEstimate::exact(0.0, VolumeMethod::ClosedForm));
        }
        let w = ((t * t - mv) / 2.0).sqrt();
        let antider = w * (mv + w * w).sqrt() + mv * (w / mv.sqrt()).asinh();
        return Some(VolumeEstimate::exact(2.0 * std::f64::consts::PI * antider, VolumeMethod::ClosedForm));
    }
    None
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        // Γ(1/2) = sqrt(π), Γ(k + 1/2) = (k - 1/2) Γ(k - 1/2)
        let mut g = std::f64::consts::PI.sqrt();
        for k in 0..(n - 1) / 2 {
            g *= k as f64 + 0.5;
        }
        g
    }
}
