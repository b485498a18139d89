//! Boundary-thickening exponents of norm and height balls.
//!
//! The thickened boundary of a ball of radius `T` is approximated by the shell
//! `(1-eps) T <= |x| <= (1+eps) T`; `kappa` is the slope of
//! `log(shell mass / ball mass)` against `log eps`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::counting::strata;
use super::{fmt_f64, long_csv, Summary};
use crate::arith::rational_to_f64;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::places::PlaceSet;
use crate::varieties::{Level, VarietySpec};
use crate::volumes_arch::{shell_integral, McParams, ShellQuery};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BallFamily {
    /// Euclidean balls on `V_m(R)`.
    Norm,
    /// Height balls `H_S < T` on the S-adic points of `V_m`.
    Height { places: PlaceSet },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kappa {
    /// Every shell is empty: the boundary carries no mass at all.
    Exact,
    Fitted { kappa: f64, residual_rms: f64 },
    /// Some shells fell below Monte Carlo resolution; fitted on the rest.
    LowerBound { kappa: f64 },
}

impl Kappa {
    pub fn value(&self) -> f64 {
        match self {
            Kappa::Exact => f64::INFINITY,
            Kappa::Fitted { kappa, .. } | Kappa::LowerBound { kappa } => *kappa,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub t: f64,
    pub eps: f64,
    pub shell: f64,
    pub ball: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellRoundedReport {
    pub family: BallFamily,
    pub level: i64,
    pub seed: u64,
    pub samples: u64,
    pub rows: Vec<ShellRow>,
    pub kappa: Kappa,
}

/// Mass of `r_lo <= |x| <= r_hi` summed over the strata of the family.
fn mass(spec: &VarietySpec, m: Level, layers: &[(f64, f64)], r_lo: f64, r_hi: f64, mc: &McParams) -> Result<f64> {
    let mut total = 0.0;
    for &(radius, weight) in layers {
        let q = ShellQuery { r_lo: r_lo / radius, r_hi: r_hi / radius, k0: 0.0, region: None };
        total += weight * shell_integral(spec, m, &q, mc)?.value;
    }
    Ok(total)
}

pub fn well_rounded_check(
    spec: &VarietySpec,
    m: Level,
    family: &BallFamily,
    eps_grid: &[f64],
    t_grid: &[f64],
    mc: &McParams,
) -> Result<WellRoundedReport> {
    if eps_grid.len() < 3 || eps_grid.iter().any(|&e| !(e > 0.0 && e <= 0.3)) {
        return Err(Error::InvalidArgument("need >= 3 epsilon values in (0, 0.3]".into()));
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max) * (1.0 + eps_grid.iter().copied().fold(0.0, f64::max));
    let layers: Vec<(f64, f64)> = match family {
        BallFamily::Norm => vec![(1.0, 1.0)],
        BallFamily::Height { places } => strata(spec, m, places, t_max, None)?
            .into_iter()
            .map(|s| (rational_to_f64(&s.radius), rational_to_f64(&s.weight)))
            .collect(),
    };
    let mut rows = Vec::new();
    for &t in t_grid {
        let ball = mass(spec, m, &layers, 0.0, t, mc)?;
        for &eps in eps_grid {
            let shell = mass(spec, m, &layers, (1.0 - eps) * t, (1.0 + eps) * t, mc)?;
            rows.push(ShellRow { t, eps, shell, ball });
        }
    }
    let kappa = fit_kappa(&rows)?;
    Ok(WellRoundedReport { family: family.clone(), level: m.get(), seed: mc.seed, samples: mc.samples, rows, kappa })
}

/// Mean over radii of the slope of `log(shell/ball)` against `log eps`.
pub fn fit_kappa(rows: &[ShellRow]) -> Result<Kappa> {
    if rows.iter().all(|r| r.ball <= 0.0) {
        return Err(Error::InsufficientData("every ball is empty".into()));
    }
    let usable: Vec<&ShellRow> = rows.iter().filter(|r| r.ball > 0.0).collect();
    if usable.iter().all(|r| r.shell == 0.0) {
        return Ok(Kappa::Exact);
    }
    let mut radii: Vec<f64> = usable.iter().map(|r| r.t).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let mut slopes = Vec::new();
    let mut sq = 0.0;
    let mut truncated = false;
    for t in radii {
        let pts: Vec<&&ShellRow> = usable.iter().filter(|r| r.t == t).collect();
        let good: Vec<(f64, f64)> = pts
            .iter()
            .filter(|r| r.shell > 0.0)
            .map(|r| (r.eps.ln(), (r.shell / r.ball).ln()))
            .collect();
        truncated |= good.len() < pts.len();
        if good.len() < 2 {
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = good.into_iter().unzip();
        let (_, slope, rms) = linear_fit(&xs, &ys)?;
        slopes.push(slope);
        sq += rms * rms;
    }
    if slopes.is_empty() {
        return Err(Error::InsufficientData("no radius has two resolvable shells".into()));
    }
    let kappa = slopes.iter().sum::<f64>() / slopes.len() as f64;
    Ok(if truncated {
        Kappa::LowerBound { kappa }
    } else {
        Kappa::Fitted { kappa, residual_rms: (sq / slopes.len() as f64).sqrt() }
    })
}

impl WellRoundedReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,eps,shell,ball\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", fmt_f64(r.t), fmt_f64(r.eps), fmt_f64(r.shell), fmt_f64(r.ball)));
        }
        out
    }

    pub fn long_csv(&self) -> String {
        let rows: Vec<(&str, f64, f64)> = self
            .rows
            .iter()
            .map(|r| ("shell_fraction", r.t, if r.ball > 0.0 { r.shell / r.ball } else { 0.0 }))
            .collect();
        long_csv(&rows)
    }

    pub fn summary(&self, spec: &VarietySpec) -> Summary {
        let mut eps: Vec<f64> = self.rows.iter().map(|r| r.eps).collect();
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        let mut t: Vec<f64> = self.rows.iter().map(|r| r.t).collect();
        t.dedup();
        Summary::new(
            "wellround",
            json!({
                "spec": spec,
                "family": self.family,
                "level": self.level,
                "eps": eps,
                "grid": t,
                "seed": self.seed,
                "samples": self.samples,
            }),
            json!({
                "kappa": self.kappa,
                "kappa_positive": self.kappa.value() > 0.0,
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_linear_shells() {
        let rows: Vec<ShellRow> = [4.0, 8.0]
            .iter()
            .flat_map(|&t| [0.05, 0.1, 0.2].map(|eps| ShellRow { t, eps, shell: eps * 10.0 * t, ball: 10.0 * t }))
            .collect();
        let Kappa::Fitted { kappa, .. } = fit_kappa(&rows).unwrap() else { panic!() };
        assert!((kappa - 1.0).abs() < 0.05);
    }

    #[test]
    fn compact_balls_past_saturation_are_exact() {
        let f = VarietySpec::diagonal(&[1, 1, 1]).unwrap();
        let rep = well_rounded_check(&f, Level::new(1).unwrap(), &BallFamily::Norm, &[0.05, 0.1, 0.2], &[2.0, 3.0], &McParams::new(5000, 1)).unwrap();
        assert_eq!(rep.kappa, Kappa::Exact);
    }

    #[test]
    fn hyperboloid_norm_balls() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let rep = well_rounded_check(&f, Level::new(1).unwrap(), &BallFamily::Norm, &[0.05, 0.1, 0.2], &[8.0, 16.0], &McParams::new(50_000, 2)).unwrap();
        let k = rep.kappa.value();
        assert!((0.5..=1.5).contains(&k), "{k}");
    }

    #[test]
    fn rejects_bad_eps() {
        let f = VarietySpec::diagonal(&[1, 1, 1, -1]).unwrap();
        let m = Level::new(1).unwrap();
        let mc = McParams::new(1000, 1);
        assert!(well_rounded_check(&f, m, &BallFamily::Norm, &[0.1, 0.2], &[4.0], &mc).is_err());
        assert!(well_rounded_check(&f, m, &BallFamily::Norm, &[0.1, 0.2, 0.5], &[4.0], &mc).is_err());
    }
}
