//! Discrepancy of projected integral points and of points with `p`-power denominators.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::regions::{locate, Region};
use super::{fmt_f64, long_csv, Summary};
use crate::arith::rational_to_f64;
use crate::enumerate::{denominator_points, integral_points, primitive_filter, BoxRegion};
use crate::error::{Error, Result};
use crate::places::PlaceSet;
use crate::varieties::{Level, VarietySpec};
use crate::volumes_arch::{shell_integral, McParams, ShellQuery, VolumeEstimate};
use crate::volumes_padic::{default_k_max, padic_ball_volume, padic_sphere_volume};

pub const DEFAULT_MIN_COUNT: u64 = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistParams {
    pub levels: Vec<i64>,
    /// Partition of the patch `{u ∈ V_1(R) : |u| <= patch_radius}`.
    pub regions: Vec<Region>,
    /// Defaults to the whole unit level set for definite quadrics.
    pub patch_radius: Option<f64>,
    pub min_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRow {
    /// The level `m`, or the denominator exponent `n`.
    pub label: i64,
    pub point_count: u64,
    pub empirical: Vec<f64>,
    pub volume: Vec<f64>,
    /// `max_i |empirical_i - volume_i|`; absent for skipped rows.
    pub discrepancy: Option<f64>,
    /// `point_count >= min_count`.
    pub trusted: bool,
    /// Point count divided by the p-adic ball volume (denominator experiment only).
    pub normalized: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub experiment: String,
    pub params: serde_json::Value,
    pub region_volumes: Vec<VolumeEstimate>,
    pub rows: Vec<DiscrepancyRow>,
}

/// Normalized invariant volume of each region inside the patch, in one seed family.
fn region_masses(
    spec: &VarietySpec,
    regions: &[Region],
    radius: f64,
    patch: &(dyn Fn(&[f64]) -> bool + Sync),
    mc: &McParams,
) -> Result<(Vec<f64>, Vec<VolumeEstimate>)> {
    let unit = Level::new(1)?;
    let total = shell_integral(spec, unit, &ShellQuery { r_lo: 0.0, r_hi: radius, k0: 0.0, region: Some(patch) }, mc)?;
    if total.value <= 0.0 {
        return Err(Error::InvalidArgument("the patch has zero invariant volume".into()));
    }
    let mut masses = Vec::with_capacity(regions.len());
    let mut estimates = Vec::with_capacity(regions.len());
    for r in regions {
        let ind = |u: &[f64]| patch(u) && r.contains(u);
        let est = shell_integral(spec, unit, &ShellQuery { r_lo: 0.0, r_hi: radius, k0: 0.0, region: Some(&ind) }, mc)?;
        masses.push(est.value / total.value);
        estimates.push(est);
    }
    Ok((masses, estimates))
}

fn check_regions(spec: &VarietySpec, regions: &[Region]) -> Result<()> {
    if regions.is_empty() {
        return Err(Error::InvalidArgument("need at least one region".into()));
    }
    for r in regions {
        r.validate()?;
        if r.dim() != spec.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: spec.ambient_dim(), got: r.dim() });
        }
    }
    Ok(())
}

fn bin(regions: &[Region], points: &[Vec<f64>]) -> Vec<u64> {
    let mut counts = vec![0u64; regions.len()];
    for u in points {
        if let Some(i) = locate(regions, u) {
            counts[i] += 1;
        }
    }
    counts
}

fn row_from_counts(label: i64, counts: &[u64], total: u64, volume: &[f64], min_count: u64) -> DiscrepancyRow {
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let d = empirical.iter().zip(volume).map(|(e, v)| (e - v).abs()).fold(0.0, f64::max);
    DiscrepancyRow {
        label,
        point_count: total,
        empirical,
        volume: volume.to_vec(),
        discrepancy: Some(d),
        trusted: total >= min_count,
        normalized: None,
        note: None,
    }
}

fn skipped(label: i64, volume: &[f64], note: String) -> DiscrepancyRow {
    DiscrepancyRow {
        label,
        point_count: 0,
        empirical: vec![0.0; volume.len()],
        volume: volume.to_vec(),
        discrepancy: None,
        trusted: false,
        normalized: None,
        note: Some(note),
    }
}

/// Projects primitive points of each `V_m` to `V_1` and compares region frequencies
/// with region volumes.
pub fn equidist_experiment(spec: &VarietySpec, places: &PlaceSet, params: &EquidistParams, mc: &McParams) -> Result<DiscrepancyReport> {
    check_regions(spec, &params.regions)?;
    if params.levels.is_empty() || params.levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("levels must be nonempty and strictly increasing".into()));
    }
    if let Some(&m) = params.levels.iter().find(|&&m| !places.in_semigroup(m as i128)) {
        return Err(Error::InvalidArgument(format!("level {m} is not in the semigroup generated by S")));
    }
    let radius = params
        .patch_radius
        .or_else(|| spec.compact_radius())
        .ok_or_else(|| Error::InvalidArgument("non-compact level set needs a patch radius".into()))?;
    // a hair of slack so boundary points of compact level sets stay inside
    let radius = radius * (1.0 + 1e-9);
    let in_patch = move |u: &[f64]| u.iter().map(|v| v * v).sum::<f64>() <= radius * radius;
    let (volume, estimates) = region_masses(spec, &params.regions, radius, &in_patch, mc)?;

    let d = spec.degree() as f64;
    let mut rows = Vec::new();
    for &mv in &params.levels {
        let m = Level::new(mv)?;
        let bound = ((mv as f64).powf(1.0 / d) * radius).floor() as u64;
        let pts = primitive_filter(&integral_points(spec, m, bound)?);
        if pts.is_empty() {
            rows.push(skipped(mv, &volume, format!("no primitive integral points on f = {mv}")));
            continue;
        }
        let projected: Vec<Vec<f64>> = pts
            .iter()
            .map(|x| spec.radial_project_int(m, x))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|u| in_patch(u))
            .collect();
        if projected.is_empty() {
            rows.push(skipped(mv, &volume, "no projected points inside the patch".into()));
            continue;
        }
        let counts = bin(&params.regions, &projected);
        rows.push(row_from_counts(mv, &counts, projected.len() as u64, &volume, params.min_count));
    }
    if rows.iter().all(|r| r.discrepancy.is_none()) {
        return Err(Error::InsufficientData("every level is empty".into()));
    }
    Ok(DiscrepancyReport {
        experiment: "equidist".into(),
        params: json!({
            "spec": spec,
            "places": places,
            "levels": params.levels,
            "regions": params.regions,
            "patch_radius": radius,
            "min_count": params.min_count,
            "seed": mc.seed,
            "samples": mc.samples,
        }),
        region_volumes: estimates,
        rows,
    })
}

/// Bins `V_1` points with denominators dividing `p^n` inside `patch` into regions, for each `n`.
#[allow(clippy::too_many_arguments)]
pub fn denominator_experiment(
    spec: &VarietySpec,
    p: u64,
    n_seq: &[u32],
    regions: &[Region],
    patch: &BoxRegion,
    min_count: u64,
    k_max: Option<u32>,
    mc: &McParams,
) -> Result<DiscrepancyReport> {
    check_regions(spec, regions)?;
    if patch.lo.len() != spec.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: spec.ambient_dim(), got: patch.lo.len() });
    }
    if n_seq.is_empty() || n_seq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("denominator exponents must be nonempty and strictly increasing".into()));
    }
    let k_max = k_max.unwrap_or_else(|| default_k_max(p));
    let radius = patch
        .lo
        .iter()
        .zip(&patch.hi)
        .map(|(a, b)| a.abs().max(b.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let boxed = patch.clone();
    let in_patch = move |u: &[f64]| boxed.contains(u);
    let (volume, estimates) = region_masses(spec, regions, radius, &in_patch, mc)?;
    let unit = Level::new(1)?;

    let n_max = *n_seq.last().unwrap();
    let mut cumulative = vec![0u64; regions.len()];
    let mut total = 0u64;
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let pts = denominator_points(spec, p, n, patch)?;
        let projected: Vec<Vec<f64>> = pts.iter().map(|z| z.to_f64()).collect();
        for (c, new) in cumulative.iter_mut().zip(bin(regions, &projected)) {
            *c += new;
        }
        total += projected.len() as u64;
        if !n_seq.contains(&n) {
            continue;
        }
        let ball = rational_to_f64(&padic_ball_volume(spec, unit, p, n as i64, k_max)?);
        let mut row = if total == 0 {
            skipped(n as i64, &volume, "no points with these denominators in the patch".into())
        } else {
            row_from_counts(n as i64, &cumulative, total, &volume, min_count)
        };
        if ball > 0.0 {
            row.normalized = Some(total as f64 / ball);
        }
        if n > 0 && pts.is_empty() && num_traits::Zero::is_zero(&padic_sphere_volume(spec, unit, p, n as i64, k_max)?) {
            row.note = Some(format!("p-adic sphere of radius {p}^{n} has volume 0"));
        }
        rows.push(row);
    }
    Ok(DiscrepancyReport {
        experiment: "denom".into(),
        params: json!({
            "spec": spec,
            "p": p,
            "n": n_seq,
            "regions": regions,
            "patch": patch,
            "min_count": min_count,
            "k_max": k_max,
            "seed": mc.seed,
            "samples": mc.samples,
        }),
        region_volumes: estimates,
        rows,
    })
}

impl DiscrepancyReport {
    fn attainable(&self) -> Vec<&DiscrepancyRow> {
        self.rows.iter().filter(|r| r.discrepancy.is_some()).collect()
    }

    /// `D(last) < D(first)` over rows with points; `None` with fewer than two such rows.
    pub fn trend(&self) -> Option<bool> {
        let rows = self.attainable();
        match (rows.first(), rows.last()) {
            (Some(a), Some(b)) if rows.len() >= 2 => Some(b.discrepancy < a.discrepancy),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let label = if self.experiment == "denom" { "n" } else { "m" };
        let mut out = format!("{label},point_count,region,empirical,volume,discrepancy,normalized,trusted,note\n");
        for r in &self.rows {
            for i in 0..r.volume.len() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.label,
                    r.point_count,
                    i,
                    fmt_f64(r.empirical[i]),
                    fmt_f64(r.volume[i]),
                    r.discrepancy.map_or(String::new(), fmt_f64),
                    r.normalized.map_or(String::new(), fmt_f64),
                    r.trusted,
                    r.note.as_deref().unwrap_or("")
                ));
            }
        }
        out
    }

    pub fn long_csv(&self) -> String {
        let mut rows = Vec::new();
        for r in &self.rows {
            rows.push(("point_count", r.label as f64, r.point_count as f64));
            if let Some(d) = r.discrepancy {
                rows.push(("discrepancy", r.label as f64, d));
            }
            if let Some(v) = r.normalized {
                rows.push(("normalized", r.label as f64, v));
            }
        }
        long_csv(&rows)
    }

    pub fn summary(&self) -> Summary {
        let rows = self.attainable();
        let first = rows.first();
        let last = rows.last();
        Summary::new(
            &self.experiment,
            self.params.clone(),
            json!({
                "attainable": rows.iter().map(|r| r.label).collect::<Vec<_>>(),
                "skipped": self.rows.iter().filter(|r| r.discrepancy.is_none()).map(|r| json!({"label": r.label, "note": r.note})).collect::<Vec<_>>(),
                "first": first.map(|r| json!({"label": r.label, "discrepancy": r.discrepancy, "point_count": r.point_count})),
                "last": last.map(|r| json!({"label": r.label, "discrepancy": r.discrepancy, "point_count": r.point_count})),
                "trend_decreasing": self.trend(),
                "all_trusted": rows.iter().all(|r| r.trusted),
            }),
        )
    }
}
